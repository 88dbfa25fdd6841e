"""Array construction, subarray tiling, steering vectors, gain patterns."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plarray import (
    SPEED_OF_LIGHT,
    AntennaPattern,
    InvalidGeometryError,
    antenna_gain,
    direction_unit,
    frame_from_boresight,
    make_ura,
    partition_subarrays,
    plane_wave_atom,
    spherical_steering,
)
from plarray.arrays import ArrayGeometry, subarray_grid_shape


class TestMakeUra:
    def test_full_medium_aperture(self):
        arr = make_ura(112, 75, 6.95e9)
        assert arr.n_elements == 8400
        d = np.linalg.norm(arr.element_positions[1] - arr.element_positions[0])
        assert d == pytest.approx(SPEED_OF_LIGHT / (2 * 6.95e9), rel=1e-12)
        assert d == pytest.approx(0.021568, abs=1e-6)

    def test_large_env_spacing(self):
        arr = make_ura(88, 32, 6e9)
        d = np.linalg.norm(arr.element_positions[1] - arr.element_positions[0])
        assert d == pytest.approx(0.024983, abs=1e-6)
        assert d > SPEED_OF_LIGHT / (2 * 6.95e9)  # larger than the medium spacing

    def test_single_element_at_origin(self):
        arr = make_ura(1, 1, 6e9, origin=(1.0, 2.0, 3.0))
        assert np.allclose(arr.element_positions, [[1, 2, 3]])

    def test_grid_is_centered_and_planar(self):
        arr = make_ura(5, 3, 5e9, origin=(0.5, -1.0, 2.0))
        assert np.allclose(arr.element_positions.mean(axis=0), (0.5, -1.0, 2.0))
        assert np.allclose(arr.element_positions[:, 0], 0.5)  # y-z plane

    def test_row_major_order(self):
        arr = make_ura(2, 3, 6e9)
        d = SPEED_OF_LIGHT / (2 * 6e9)
        # index = r*cols + c; columns step along +y, rows along +z
        assert np.allclose(arr.element_positions[1] - arr.element_positions[0], (0, d, 0))
        assert np.allclose(arr.element_positions[3] - arr.element_positions[0], (0, 0, d))

    def test_rejects_bad_dims(self):
        with pytest.raises(InvalidGeometryError):
            make_ura(0, 5, 6e9)
        with pytest.raises(InvalidGeometryError):
            make_ura(4, 4, -1.0)

    def test_rejects_duplicate_positions(self):
        pos = np.zeros((4, 3))
        with pytest.raises(InvalidGeometryError, match="distinct"):
            ArrayGeometry(pos, 2, 2, 6e9)

    def test_rejects_nonplanar(self):
        pos = np.array([[0, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 1], [1e-6, 0.5, 0.5]])
        with pytest.raises(InvalidGeometryError, match="planar"):
            ArrayGeometry(pos, 1, 5, 6e9)

    def test_oriented_frame(self):
        frame = frame_from_boresight((0.0, 1.0, 0.0))
        arr = make_ura(2, 2, 6e9, orientation=frame)
        assert np.allclose(arr.boresight, (0, 1, 0))
        # elements perpendicular to boresight
        rel = arr.element_positions - arr.element_positions.mean(axis=0)
        assert np.allclose(rel @ arr.boresight, 0, atol=1e-12)


class TestPartition:
    def test_8x8_size4_gives_4(self):
        assert len(partition_subarrays(make_ura(8, 8, 6e9), 4)) == 4

    def test_112x75_size4_gives_504(self):
        arr = make_ura(112, 75, 6.95e9)
        subs = partition_subarrays(arr, 4)
        assert len(subs) == 28 * 18 == 504

    def test_9x9_size4_drops_edges(self):
        subs = partition_subarrays(make_ura(9, 9, 6e9), 4)
        assert len(subs) == 4

    def test_disjoint_and_complete_tiles(self):
        arr = make_ura(8, 12, 6e9)
        subs = partition_subarrays(arr, 4)
        all_idx = np.concatenate([s.element_indices for s in subs])
        assert len(all_idx) == len(set(all_idx.tolist()))
        assert all(s.n_elements == 16 for s in subs)
        for s in subs:
            assert np.allclose(
                s.centroid, arr.element_positions[s.element_indices].mean(axis=0)
            )

    def test_size_too_large(self):
        with pytest.raises(ValueError):
            partition_subarrays(make_ura(4, 8, 6e9), 6)

    def test_grid_shape(self):
        assert subarray_grid_shape(make_ura(112, 75, 6.95e9), 8) == (14, 9)


class TestPlaneWaveAtom:
    def setup_method(self):
        self.arr = make_ura(4, 4, 6.95e9)
        self.sub = partition_subarrays(self.arr, 4)[0]
        self.freqs = np.linspace(6.7e9, 7.2e9, 16)

    def test_unit_norm(self):
        a = plane_wave_atom(self.sub, self.arr, self.freqs, 10e-9, 0.3, -0.2)
        assert np.linalg.norm(a) == pytest.approx(1.0, rel=1e-12)

    def test_zero_delay_single_element(self):
        arr = make_ura(1, 1, 6e9)
        sub = partition_subarrays(arr, 1)[0]
        a = plane_wave_atom(sub, arr, self.freqs, 0.0, 0.1, 0.2)
        assert np.allclose(a, 1.0 / np.sqrt(len(self.freqs)))

    def test_identical_parameters_coherent(self):
        a = plane_wave_atom(self.sub, self.arr, self.freqs, 5e-9, 0.2, 0.1)
        b = plane_wave_atom(self.sub, self.arr, self.freqs, 5e-9, 0.2, 0.1)
        assert abs(np.vdot(a, b)) == pytest.approx(1.0, rel=1e-12)

    def test_quarter_turn_decorrelates(self):
        freqs = np.linspace(6.95e9 - 250e6, 6.95e9 + 250e6, 16)
        a = plane_wave_atom(self.sub, self.arr, freqs, 5e-9, 0.0, 0.0)
        b = plane_wave_atom(self.sub, self.arr, freqs, 5e-9, np.pi / 2, 0.0)
        assert abs(np.vdot(a, b)) < 0.3

    @given(
        st.floats(0.0, 100e-9),
        st.floats(-np.pi / 2, np.pi / 2),
        st.floats(-np.pi / 2, np.pi / 2),
    )
    @settings(max_examples=60, deadline=None)
    def test_unit_norm_everywhere(self, delay, az, el):
        a = plane_wave_atom(self.sub, self.arr, self.freqs, delay, az, el)
        assert np.linalg.norm(a) == pytest.approx(1.0, rel=1e-12)
        assert np.allclose(np.abs(a), np.abs(a[0]), rtol=1e-12)


class TestSphericalSteering:
    def test_unit_phase_at_wavelength_distance(self):
        arr = make_ura(1, 1, 6e9)
        f = 6e9
        point = arr.element_positions[0] + np.array([SPEED_OF_LIGHT / f, 0, 0])
        S = spherical_steering(arr, point, [f])
        assert S[0, 0] == pytest.approx(1.0 + 0.0j, abs=1e-9)

    def test_single_element_phase_formula(self):
        arr = make_ura(1, 1, 6e9)
        point = arr.element_positions[0] + np.array([0.5, 0.0, 0.0])
        S = spherical_steering(arr, point, [6e9])
        expected = np.exp(-2j * np.pi * 6e9 * 0.5 / SPEED_OF_LIGHT)
        assert S[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_far_field_matches_plane_wave(self):
        arr = make_ura(4, 4, 6.95e9)
        sub = partition_subarrays(arr, 4)[0]
        freqs = np.linspace(6.8e9, 7.1e9, 8)
        az, el, dist = 0.2, -0.1, 1000.0
        point = arr.reference_point + dist * (arr.frame @ direction_unit(az, el))
        S = spherical_steering(arr, point, freqs)
        atom = plane_wave_atom(sub, arr, freqs, dist / SPEED_OF_LIGHT, az, el)
        atom = atom.reshape(16, len(freqs)) * np.sqrt(atom.size)
        mismatch = np.angle(S * np.conj(atom))
        assert np.abs(mismatch).max() < 1e-3

    def test_rejects_point_on_element(self):
        arr = make_ura(2, 2, 6e9)
        with pytest.raises(InvalidGeometryError):
            spherical_steering(arr, arr.element_positions[2], [6e9])

    def test_phase_linear_in_frequency(self):
        arr = make_ura(3, 3, 6e9)
        point = np.array([2.0, 0.3, -0.1])
        f1, f2 = 4e9, 2.5e9
        s1 = spherical_steering(arr, point, [f1])
        s2 = spherical_steering(arr, point, [f2])
        s12 = spherical_steering(arr, point, [f1 + f2])
        assert np.allclose(s1 * s2, s12, atol=1e-12)


class TestAntennaGain:
    def test_isotropic(self):
        pat = AntennaPattern("isotropic")
        assert antenna_gain(pat, (0, 0, 1), (1, 0, 0)) == 1.0

    def test_patch_boresight(self):
        pat = AntennaPattern("patch", q=2.0)
        assert antenna_gain(pat, (1, 0, 0), (1, 0, 0)) == pytest.approx(1.0)

    def test_patch_60deg(self):
        pat = AntennaPattern("patch", q=2.0)
        d = (np.cos(np.radians(60)), np.sin(np.radians(60)), 0.0)
        assert antenna_gain(pat, d, (1, 0, 0)) == pytest.approx(0.25, rel=1e-12)

    def test_back_floor(self):
        pat = AntennaPattern("patch", q=2.0, back_floor=0.05)
        assert antenna_gain(pat, (-1, 0, 0), (1, 0, 0)) == 0.05

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            antenna_gain(AntennaPattern(), (0, 0, 2), (1, 0, 0))

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            AntennaPattern("cardioid")
