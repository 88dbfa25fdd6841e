"""NumPy implementations of the hot kernels.

Same contracts as the compiled extension in _kernels.pyx; selected at import
time by plarray.kernels when the extension is unavailable (or forced via
PLARRAY_KERNELS=numpy).
"""

import numpy as np

_TWO_PI_OVER_C = 2.0 * np.pi / 299792458.0


def spherical_power(H, pos, points, freqs, df):
    """Beamformer power at each probe point.

    power[g] = |sum_{m,n} H[m,n] exp(+j 2 pi f_n d(g,m) / c)|^2 / (M N)^2
    with d(g, m) the probe-to-element distance.  df > 0 marks a uniform
    frequency grid and enables the phase-recurrence fast path.
    """
    M, N = H.shape
    G = len(points)
    out = np.empty(G)
    scale = 1.0 / (M * N)
    f0 = freqs[0]
    chunk = max(1, int(4_000_000 // max(M, 1)))
    for s in range(0, G, chunk):
        pts = points[s : s + chunk]
        d = np.linalg.norm(pts[:, None, :] - pos[None, :, :], axis=2)
        if np.any(d < 1e-12):
            raise ValueError("beamforming grid point coincides with an array element")
        acc = np.zeros(len(pts), dtype=complex)
        if df > 0.0:
            p = np.exp(1j * (_TWO_PI_OVER_C * f0) * d)
            step = np.exp(1j * (_TWO_PI_OVER_C * df) * d)
            for n in range(N):
                acc += p @ H[:, n]
                p *= step
        else:
            for n in range(N):
                acc += np.exp(1j * (_TWO_PI_OVER_C * freqs[n]) * d) @ H[:, n]
        out[s : s + chunk] = (acc.real**2 + acc.imag**2) * scale * scale
    return out


def accumulate_specular(out, amps, delays, visible, freqs):
    """out[m, :] += visible[m] * amps[m] * exp(-j 2 pi freqs * delays[m])."""
    active = visible.astype(bool) & (amps != 0)
    if not active.any():
        return
    phase = np.exp(-2j * np.pi * np.outer(delays[active], freqs))
    out[active] += amps[active, None] * phase
