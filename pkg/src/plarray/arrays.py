"""Uniform rectangular arrays, subarray tiling, steering vectors, gain patterns.

The array-local frame has x along boresight and z up; a direction
(azimuth az, elevation el) maps to the unit vector
u = (cos el cos az, cos el sin az, sin el) in that frame.  Elements lie in
the local y-z plane: columns step along +y, rows along +z, centered on the
array origin, row-major element order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometryError
from .geometry import SPEED_OF_LIGHT


def direction_unit(az, el) -> np.ndarray:
    """Array-local unit vector(s) for azimuth/elevation in radians."""
    az = np.asarray(az, dtype=float)
    el = np.asarray(el, dtype=float)
    return np.stack(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1
    )


def frame_from_boresight(boresight, up_hint=(0.0, 0.0, 1.0)) -> np.ndarray:
    """3x3 rotation whose columns are the local x (boresight), y, z axes.

    Local z is the up hint projected perpendicular to boresight; boresight
    may not be parallel to the hint.
    """
    x = np.asarray(boresight, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise InvalidGeometryError("boresight must be non-zero")
    x = x / nx
    up = np.asarray(up_hint, dtype=float)
    z = up - (up @ x) * x
    nz = np.linalg.norm(z)
    if nz < 1e-9:
        raise InvalidGeometryError("boresight parallel to up hint; pick another hint")
    z = z / nz
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


@dataclass(frozen=True)
class ArrayGeometry:
    """Planar array: element positions, grid shape, carrier, orientation.

    frame columns are the local x/y/z axes in global coordinates;
    boresight is the local +x axis.
    """

    element_positions: np.ndarray  # (M, 3), row-major grid order
    rows: int
    cols: int
    f_c: float
    frame: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        pos = np.asarray(self.element_positions, dtype=float)
        object.__setattr__(self, "element_positions", pos)
        object.__setattr__(self, "frame", np.asarray(self.frame, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise InvalidGeometryError(f"element positions must be (M, 3), got {pos.shape}")
        if self.rows * self.cols != len(pos):
            raise InvalidGeometryError(
                f"rows*cols = {self.rows * self.cols} != {len(pos)} elements"
            )
        if self.f_c <= 0:
            raise InvalidGeometryError("carrier frequency must be positive")
        # pairwise distinct via rounding well below any sane element spacing
        uniq = np.unique(np.round(pos, 12), axis=0)
        if len(uniq) != len(pos):
            raise InvalidGeometryError("element positions are not pairwise distinct")
        if len(pos) > 3:
            centered = pos - pos.mean(axis=0)
            _, _, vt = np.linalg.svd(centered, full_matrices=False)
            out_of_plane = np.abs(centered @ vt[-1])
            if out_of_plane.max() > 1e-9:
                raise InvalidGeometryError("array is not planar within 1e-9 m")

    @property
    def boresight(self) -> np.ndarray:
        return self.frame[:, 0]

    @property
    def n_elements(self) -> int:
        return len(self.element_positions)

    @property
    def reference_point(self) -> np.ndarray:
        """Phase center used for spectra: mean element position."""
        return self.element_positions.mean(axis=0)

    def to_local(self, vec: np.ndarray) -> np.ndarray:
        """Rotate global direction vector(s) into the array-local frame."""
        return np.asarray(vec, dtype=float) @ self.frame


@dataclass(frozen=True)
class Subarray:
    index: int
    element_indices: np.ndarray
    centroid: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.element_indices, dtype=int)
        if len(np.unique(idx)) != len(idx):
            raise InvalidGeometryError(f"subarray {self.index}: repeated element index")
        object.__setattr__(self, "element_indices", idx)
        object.__setattr__(self, "centroid", np.asarray(self.centroid, dtype=float))

    @property
    def n_elements(self) -> int:
        return len(self.element_indices)


@dataclass(frozen=True)
class AntennaPattern:
    """Amplitude gain pattern: isotropic, or cos^q patch with a back floor."""

    kind: str = "isotropic"
    q: float = 2.0
    back_floor: float = 0.0

    def __post_init__(self):
        if self.kind not in ("isotropic", "patch"):
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if self.q < 0:
            raise ValueError("patch exponent must be >= 0")
        if not 0.0 <= self.back_floor < 1.0:
            raise ValueError("back_floor must be in [0, 1)")


def make_ura(rows: int, cols: int, f_c: float, origin=(0.0, 0.0, 0.0), orientation=None) -> ArrayGeometry:
    """Half-wavelength-spaced uniform rectangular array centered on origin.

    orientation: 3x3 rotation (local-to-global) or None for identity
    (boresight +x, rows stacked along +z, columns along +y).
    """
    if rows < 1 or cols < 1:
        raise InvalidGeometryError(f"array dimensions must be >= 1, got {rows}x{cols}")
    if f_c <= 0:
        raise InvalidGeometryError("carrier frequency must be positive")
    d = SPEED_OF_LIGHT / (2.0 * f_c)
    origin = np.asarray(origin, dtype=float).reshape(3)
    frame = np.eye(3) if orientation is None else np.asarray(orientation, dtype=float)
    r = np.arange(rows) - (rows - 1) / 2.0
    c = np.arange(cols) - (cols - 1) / 2.0
    rr, cc = np.meshgrid(r, c, indexing="ij")
    local = np.column_stack(
        [np.zeros(rows * cols), cc.ravel() * d, rr.ravel() * d]
    )
    pos = origin + local @ frame.T
    return ArrayGeometry(pos, rows, cols, float(f_c), frame)


def partition_subarrays(arr: ArrayGeometry, size: int) -> list:
    """Disjoint size x size tiles anchored at the grid origin.

    Incomplete edge tiles are dropped; tiles are ordered row-major over the
    tile grid.
    """
    if size < 1:
        raise ValueError("subarray size must be >= 1")
    if size > min(arr.rows, arr.cols):
        raise ValueError(
            f"subarray size {size} exceeds array dimensions {arr.rows}x{arr.cols}"
        )
    n_br = arr.rows // size
    n_bc = arr.cols // size
    subs = []
    for br in range(n_br):
        for bc in range(n_bc):
            rr = np.arange(br * size, (br + 1) * size)
            cc = np.arange(bc * size, (bc + 1) * size)
            idx = (rr[:, None] * arr.cols + cc[None, :]).ravel()
            centroid = arr.element_positions[idx].mean(axis=0)
            subs.append(Subarray(br * n_bc + bc, idx, centroid))
    return subs


def subarray_grid_shape(arr: ArrayGeometry, size: int) -> tuple:
    return arr.rows // size, arr.cols // size


def plane_wave_atom(sub: Subarray, arr: ArrayGeometry, freqs, delay: float, az: float, el: float) -> np.ndarray:
    """Unit-norm wideband dictionary atom for one (delay, azimuth, elevation).

    Entry (m, n) combines the plane-wave phase of element m toward (az, el),
    referenced to the subarray centroid, with the delay phasor at frequency
    f_n; returned flattened element-major, length M_sub * N.
    """
    freqs = np.asarray(freqs, dtype=float)
    rel = arr.element_positions[sub.element_indices] - sub.centroid
    proj = arr.to_local(rel) @ direction_unit(az, el)  # (M_sub,)
    tau_m = delay - proj / SPEED_OF_LIGHT
    atom = np.exp(-2j * np.pi * np.outer(tau_m, freqs))
    return (atom / np.sqrt(atom.size)).ravel()


def spherical_steering(arr: ArrayGeometry, point, freqs) -> np.ndarray:
    """Exact-distance steering matrix, entry (m, n) = exp(-j 2 pi f_n d_m / c)."""
    point = np.asarray(point, dtype=float).reshape(3)
    freqs = np.asarray(freqs, dtype=float)
    d = np.linalg.norm(point - arr.element_positions, axis=1)
    if np.any(d < 1e-12):
        raise InvalidGeometryError("steering point coincides with an array element")
    return np.exp(-2j * np.pi * np.outer(d, freqs) / SPEED_OF_LIGHT)


def antenna_gain(pattern: AntennaPattern, direction, boresight) -> float:
    """Linear amplitude gain toward a unit direction, given the boresight."""
    direction = np.asarray(direction, dtype=float)
    boresight = np.asarray(boresight, dtype=float)
    for v, label in ((direction, "direction"), (boresight, "boresight")):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError(f"{label} must be unit-norm")
    if pattern.kind == "isotropic":
        return 1.0
    cosang = float(np.clip(direction @ boresight, -1.0, 1.0))
    if cosang <= 0.0:
        return pattern.back_floor
    return max(cosang**pattern.q, pattern.back_floor)


def antenna_gain_many(pattern: AntennaPattern, directions, boresight) -> np.ndarray:
    """Vectorized antenna_gain over an (E, 3) block of unit directions."""
    if pattern.kind == "isotropic":
        return np.ones(len(np.atleast_2d(directions)))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    cosang = np.clip(directions @ np.asarray(boresight, dtype=float), -1.0, 1.0)
    front = np.clip(cosang, 0.0, 1.0) ** pattern.q
    return np.where(cosang > 0.0, np.maximum(front, pattern.back_floor), pattern.back_floor)
