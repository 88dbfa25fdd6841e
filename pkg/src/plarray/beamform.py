"""Spherical-wave delay/angle power spectra over the full array and band.

Probe points are parameterized by (azimuth, elevation, distance) in the
array-local frame; the spectrum is the coherent full-array, full-band sum
against exact-distance steering, normalized by (M N)^2.  Marginals collapse
one axis by maximum, preserving peak powers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .arrays import ArrayGeometry, direction_unit
from .synth import ChannelTensor


@dataclass(frozen=True)
class SpectrumGrid:
    azimuths: np.ndarray  # rad
    elevations: np.ndarray  # rad
    distances: np.ndarray  # m

    def __post_init__(self):
        for name in ("azimuths", "elevations", "distances"):
            ax = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, ax)
            if ax.ndim != 1 or len(ax) == 0:
                raise ValueError(f"{name} must be a non-empty 1-D axis")
            if len(ax) > 1 and not np.all(np.diff(ax) > 0):
                raise ValueError(f"{name} must be strictly increasing")

    @property
    def shape(self) -> tuple:
        return len(self.azimuths), len(self.elevations), len(self.distances)

    def points(self, arr: ArrayGeometry) -> np.ndarray:
        """Global probe coordinates, shape (n_az * n_el * n_dist, 3), az-major."""
        u = direction_unit(
            self.azimuths[:, None].repeat(len(self.elevations), 1).ravel(),
            np.tile(self.elevations, len(self.azimuths)),
        )  # (n_az * n_el, 3)
        u_global = u @ arr.frame.T
        pts = (
            arr.reference_point
            + u_global[:, None, :] * self.distances[None, :, None]
        )
        return pts.reshape(-1, 3)


@dataclass(frozen=True)
class BeamSpectrum:
    grid: SpectrumGrid
    power: np.ndarray  # (n_az, n_el, n_dist), linear

    def __post_init__(self):
        p = np.asarray(self.power, dtype=float)
        object.__setattr__(self, "power", p)
        if p.shape != self.grid.shape:
            raise ValueError(f"power shape {p.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("spectrum power must be finite and non-negative")


def spherical_spectrum(tensor: ChannelTensor, arr: ArrayGeometry, grid: SpectrumGrid) -> BeamSpectrum:
    """Beamformer power at every (azimuth, elevation, distance) grid point."""
    if tensor.H.shape[0] != arr.n_elements or not np.allclose(
        tensor.element_positions, arr.element_positions
    ):
        raise ValueError("channel tensor does not match the array geometry")
    pts = grid.points(arr)
    power = kernels.spherical_power(tensor.H, arr.element_positions, pts, tensor.freqs)
    return BeamSpectrum(grid, power.reshape(grid.shape))


def marginals(spec: BeamSpectrum) -> dict:
    """Max-projection marginals over each collapsed axis."""
    return {
        "az_el": spec.power.max(axis=2),
        "az_dist": spec.power.max(axis=1),
        "el_dist": spec.power.max(axis=0),
    }


_NEIGHBOR_OFFSETS = [
    (i, j, k)
    for i in (-1, 0, 1)
    for j in (-1, 0, 1)
    for k in (-1, 0, 1)
    if (i, j, k) != (0, 0, 0)
]


def find_peaks(spec: BeamSpectrum, min_db_below_max: float, max_peaks: int) -> list:
    """Local maxima (26-neighborhood) within a dB window below the global max.

    Sorted strongest first; exact power ties resolve to the lower
    (az, el, dist) index, lexicographically.  Returns
    [(az, el, dist, power), ...] with at most max_peaks entries.
    """
    p = spec.power
    if p.size == 0 or max_peaks < 1:
        return []
    padded = np.pad(p, 1, constant_values=-np.inf)
    is_peak = np.ones_like(p, dtype=bool)
    for di, dj, dk in _NEIGHBOR_OFFSETS:
        shifted = padded[
            1 + di : 1 + di + p.shape[0],
            1 + dj : 1 + dj + p.shape[1],
            1 + dk : 1 + dk + p.shape[2],
        ]
        is_peak &= p >= shifted
    floor = p.max() * 10.0 ** (-min_db_below_max / 10.0)
    is_peak &= p >= floor
    idx = np.argwhere(is_peak)
    order = sorted(range(len(idx)), key=lambda r: (-p[tuple(idx[r])], *idx[r]))
    peaks = []
    for r in order[:max_peaks]:
        i, j, k = idx[r]
        peaks.append(
            (
                float(spec.grid.azimuths[i]),
                float(spec.grid.elevations[j]),
                float(spec.grid.distances[k]),
                float(p[i, j, k]),
            )
        )
    return peaks
