"""Kernel backend selection: compiled extension if present, NumPy otherwise.

Set PLARRAY_KERNELS=numpy or =cython to force a backend (cython raises if the
extension was not built).  BACKEND names the active implementation.
"""

import os

import numpy as np

_forced = os.environ.get("PLARRAY_KERNELS", "").strip().lower()
if _forced not in ("", "numpy", "cython"):
    raise ImportError(f"PLARRAY_KERNELS must be 'numpy' or 'cython', got {_forced!r}")

_impl = None
if _forced in ("", "cython"):
    try:
        from . import _kernels as _impl  # compiled extension

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = None
if _impl is None:
    from . import _kernels_np as _impl

    BACKEND = "numpy"


def uniform_step(freqs) -> float:
    """Grid step if freqs is a uniform increasing grid, else 0.0."""
    freqs = np.asarray(freqs, dtype=float)
    if len(freqs) < 2:
        return 0.0
    steps = np.diff(freqs)
    df = float(steps[0])
    if df <= 0:
        return 0.0
    if np.abs(steps - df).max() <= 1e-9 * abs(df):
        return df
    return 0.0


def spherical_power(H, element_positions, points, freqs) -> np.ndarray:
    """Dispatch the beamformer power sum; see _kernels_np.spherical_power."""
    H = np.ascontiguousarray(H, dtype=np.complex128)
    pos = np.ascontiguousarray(element_positions, dtype=np.float64)
    pts = np.ascontiguousarray(points, dtype=np.float64)
    f = np.ascontiguousarray(freqs, dtype=np.float64)
    return _impl.spherical_power(H, pos, pts, f, uniform_step(f))


def accumulate_specular(out, amps, delays, visible, freqs) -> None:
    """Add one visibility-gated specular component to a channel matrix in place."""
    a = np.ascontiguousarray(amps, dtype=np.complex128)
    tau = np.ascontiguousarray(delays, dtype=np.float64)
    vis = np.ascontiguousarray(visible, dtype=np.uint8)
    f = np.ascontiguousarray(freqs, dtype=np.float64)
    _impl.accumulate_specular(out, a, tau, vis, f)
