"""Compiled and NumPy kernel backends must agree to tight tolerances."""

import numpy as np
import pytest

from plarray import kernels
from plarray import _kernels_np

try:
    from plarray import _kernels as _compiled
except ImportError:
    _compiled = None

needs_compiled = pytest.mark.skipif(_compiled is None, reason="compiled extension not built")


def _problem(seed, M=48, N=24, G=40):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
    pos = rng.uniform(-0.3, 0.3, size=(M, 3))
    pts = rng.uniform(1.0, 6.0, size=(G, 3)) + np.array([2.0, 0, 0])
    freqs = np.linspace(6.7e9, 7.2e9, N)
    return np.ascontiguousarray(H), pos, pts, freqs


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.BACKEND in ("cython", "numpy")

    def test_uniform_step_detection(self):
        assert kernels.uniform_step(np.array([1e9, 2e9, 3e9])) == 1e9
        assert kernels.uniform_step(np.array([1e9, 2e9, 4e9])) == 0.0
        assert kernels.uniform_step(np.array([3e9, 2e9, 1e9])) == 0.0


class TestSphericalPowerBackends:
    @needs_compiled
    def test_compiled_matches_numpy_uniform(self):
        H, pos, pts, freqs = _problem(0)
        df = float(freqs[1] - freqs[0])
        a = _compiled.spherical_power(H, pos, pts, freqs, df)
        b = _kernels_np.spherical_power(H, pos, pts, freqs, df)
        assert np.abs(a - b).max() <= 1e-9 * b.max()

    @needs_compiled
    def test_compiled_matches_numpy_nonuniform_path(self):
        H, pos, pts, freqs = _problem(1)
        a = _compiled.spherical_power(H, pos, pts, freqs, 0.0)
        b = _kernels_np.spherical_power(H, pos, pts, freqs, 0.0)
        assert np.abs(a - b).max() <= 1e-9 * b.max()

    def test_recurrence_matches_exact(self):
        H, pos, pts, freqs = _problem(2)
        df = float(freqs[1] - freqs[0])
        fast = kernels.spherical_power(H, pos, pts, freqs)
        exact = _kernels_np.spherical_power(H, pos, pts, freqs, 0.0)
        assert np.abs(fast - exact).max() <= 1e-9 * exact.max()
        assert df > 0

    def test_element_collision_raises(self):
        H, pos, pts, freqs = _problem(3)
        pts[5] = pos[7]
        with pytest.raises(ValueError):
            kernels.spherical_power(H, pos, pts, freqs)


class TestAccumulateBackends:
    @needs_compiled
    def test_compiled_matches_numpy(self):
        rng = np.random.default_rng(4)
        M, N = 32, 20
        freqs = np.linspace(6.7e9, 7.2e9, N)
        amps = (rng.standard_normal(M) + 1j * rng.standard_normal(M)).astype(complex)
        delays = rng.uniform(0, 50e-9, M)
        vis = (rng.uniform(size=M) > 0.3).astype(np.uint8)
        out_a = np.zeros((M, N), complex)
        out_b = np.zeros((M, N), complex)
        _compiled.accumulate_specular(out_a, amps, delays, vis, freqs)
        _kernels_np.accumulate_specular(out_b, amps, delays, vis, freqs)
        assert np.abs(out_a - out_b).max() <= 1e-12 * np.abs(out_b).max()
        assert np.all(out_a[vis == 0] == 0)
