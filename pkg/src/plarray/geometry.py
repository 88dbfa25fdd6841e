"""Polygonal environment model and image-source path geometry.

Reflecting surfaces are finite planar polygons (facets).  Specular paths are
found by mirroring the transmitter across facet chains and unfolding the
resulting image sources toward each receive element; a path exists only if
every bounce point lands inside its facet and no other facet occludes a
segment.  Visibility of a component over an array is the per-element success
of this test.

Conventions: coordinates in meters, right-handed, z up.  All functions are
pure; batch variants vectorize over receive points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidGeometryError

SPEED_OF_LIGHT = 299792458.0

# Vertices must lie on a common plane and bounce points inside the polygon
# within this tolerance; boundary points count as inside.
COPLANAR_TOL = 1e-9
INSIDE_TOL = 1e-9
# Occlusion hits closer than this to a segment endpoint are ignored so a
# reflecting facet does not occlude its own bounce point.
ENDPOINT_EPS = 1e-6


def _as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise InvalidGeometryError(f"non-finite point: {p!r}")
    return a


@dataclass(frozen=True)
class Facet:
    """A planar, simple polygon with a complex reflection coefficient.

    Vertex winding defines the normal (right-hand rule); reflection itself
    is two-sided.  |reflection_coeff| must not exceed 1.
    """

    id: str
    name: str
    vertices: np.ndarray
    reflection_coeff: complex = 1.0 + 0.0j
    # derived, filled in __post_init__
    normal: np.ndarray = field(init=False, repr=False, compare=False)
    _frame2d: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
            raise InvalidGeometryError(
                f"facet {self.id!r}: need >= 3 vertices of dimension 3, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidGeometryError(f"facet {self.id!r}: non-finite vertex")
        if abs(self.reflection_coeff) > 1.0 + 1e-12:
            raise InvalidGeometryError(
                f"facet {self.id!r}: |reflection_coeff| = "
                f"{abs(self.reflection_coeff):.6g} exceeds 1"
            )
        object.__setattr__(self, "vertices", v)

        # Newell normal; its magnitude is twice the polygon area.
        c = v.mean(axis=0)
        r = v - c
        n = np.cross(r, np.roll(r, -1, axis=0)).sum(axis=0)
        area2 = np.linalg.norm(n)
        scale = max(1.0, float(np.abs(r).max()))
        if area2 < 1e-12 * scale * scale:
            raise InvalidGeometryError(f"facet {self.id!r}: zero area (degenerate)")
        n = n / area2
        object.__setattr__(self, "normal", n)

        dist = (v - v[0]) @ n
        if np.abs(dist).max() > COPLANAR_TOL:
            raise InvalidGeometryError(
                f"facet {self.id!r}: vertices not coplanar "
                f"(max deviation {np.abs(dist).max():.3e} m)"
            )

        # orthonormal in-plane basis for 2-D point-in-polygon tests
        e1 = r[np.argmax(np.linalg.norm(r, axis=1))]
        e1 = e1 / np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        poly2d = np.column_stack(((v - v[0]) @ e1, (v - v[0]) @ e2))
        object.__setattr__(self, "_frame2d", (e1, e2, poly2d))

        if _polygon_self_intersects(poly2d):
            raise InvalidGeometryError(f"facet {self.id!r}: polygon is self-intersecting")

    @property
    def plane_point(self) -> np.ndarray:
        return self.vertices[0]

    def contains(self, points: np.ndarray, tol: float = INSIDE_TOL) -> np.ndarray:
        """Boundary-inclusive point-in-polygon test for points on the facet plane.

        points: (..., 3). Returns a boolean array of the leading shape.
        """
        p = np.asarray(points, dtype=float)
        squeeze = p.ndim == 1
        p = np.atleast_2d(p)
        e1, e2, poly = self._frame2d
        rel = p - self.vertices[0]
        xy = np.column_stack((rel @ e1, rel @ e2))
        inside = _points_in_polygon_2d(xy, poly, tol)
        return inside[0] if squeeze else inside


def _cross2(u, v) -> float:
    return u[0] * v[1] - u[1] * v[0]


def _segments_intersect_2d(a0, a1, b0, b1) -> bool:
    d1 = _cross2(a1 - a0, b0 - a0)
    d2 = _cross2(a1 - a0, b1 - a0)
    d3 = _cross2(b1 - b0, a0 - b0)
    d4 = _cross2(b1 - b0, a1 - b0)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _polygon_self_intersects(poly: np.ndarray) -> bool:
    n = len(poly)
    for i in range(n):
        a0, a1 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect_2d(a0, a1, poly[j], poly[(j + 1) % n]):
                return True
    return False


def _points_in_polygon_2d(xy: np.ndarray, poly: np.ndarray, tol: float) -> np.ndarray:
    """Crossing-number test, with points within tol of an edge counted inside."""
    x, y = xy[:, 0], xy[:, 1]
    inside = np.zeros(len(xy), dtype=bool)
    near_edge = np.zeros(len(xy), dtype=bool)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < np.where(crosses, x_at, np.inf))
        # distance from point to the edge segment
        ex, ey = x1 - x0, y1 - y0
        ee = ex * ex + ey * ey
        t = np.clip(((x - x0) * ex + (y - y0) * ey) / max(ee, 1e-300), 0.0, 1.0)
        d2 = (x - (x0 + t * ex)) ** 2 + (y - (y0 + t * ey)) ** 2
        near_edge |= d2 <= tol * tol
    return inside | near_edge


@dataclass(frozen=True)
class EnvironmentModel:
    """A named collection of facets with unique ids."""

    facets: tuple
    name: str = ""

    def __post_init__(self):
        facets = tuple(self.facets)
        ids = [f.id for f in facets]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise InvalidGeometryError(f"duplicate facet ids: {dupes}")
        object.__setattr__(self, "facets", facets)

    def facet_by_id(self, facet_id: str) -> Facet:
        for f in self.facets:
            if f.id == facet_id:
                return f
        raise KeyError(facet_id)


@dataclass(frozen=True)
class ImageSource:
    """Mirror-source position for one specular component.

    order 0 is the direct path: empty chain, position at the transmitter,
    unit gain.  For order k the position is the transmitter mirrored across
    the chain facets in order and the gain factor is the product of their
    reflection coefficients.
    """

    component_id: str
    order: int
    facet_chain: tuple
    position: np.ndarray
    gain_factor: complex

    def __post_init__(self):
        object.__setattr__(self, "position", _as_point(self.position))
        object.__setattr__(self, "facet_chain", tuple(self.facet_chain))
        if self.order != len(self.facet_chain):
            raise InvalidGeometryError(
                f"image source {self.component_id!r}: order {self.order} does not "
                f"match chain length {len(self.facet_chain)}"
            )
        if abs(self.gain_factor) > 1.0 + 1e-12:
            raise InvalidGeometryError(
                f"image source {self.component_id!r}: |gain_factor| exceeds 1"
            )


@dataclass(frozen=True)
class SpecularPath:
    """An unfolded specular path: receive point, bounce points, transmitter."""

    points: np.ndarray  # (order + 2, 3), rx first, tx last
    length: float
    delay: float


def mirror_point(p, facet: Facet) -> np.ndarray:
    """Reflect a point across the facet's supporting plane."""
    p = _as_point(p)
    n = facet.normal
    if not np.isfinite(n).all() or abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise InvalidGeometryError(f"facet {facet.id!r}: degenerate normal")
    return p - 2.0 * float((p - facet.plane_point) @ n) * n


def component_id_for_chain(chain) -> str:
    return "+".join(chain) if chain else "LOS"


def compute_image_sources(env: EnvironmentModel, ue, max_order: int) -> list:
    """Enumerate image sources for all facet chains up to max_order.

    Chains never repeat a facet consecutively (ABA is allowed, AA is not).
    The order-0 (direct) source is always first.
    """
    if max_order not in (0, 1, 2):
        raise ValueError(f"max_order must be 0, 1, or 2, got {max_order}")
    ue = _as_point(ue)
    sources = [ImageSource("LOS", 0, (), ue, 1.0 + 0.0j)]
    frontier = [((), ue, 1.0 + 0.0j)]
    for order in range(1, max_order + 1):
        new_frontier = []
        for chain, pos, gain in frontier:
            for facet in env.facets:
                if chain and chain[-1] == facet.id:
                    continue
                new_chain = chain + (facet.id,)
                new_pos = mirror_point(pos, facet)
                new_gain = gain * facet.reflection_coeff
                sources.append(
                    ImageSource(
                        component_id_for_chain(new_chain),
                        order,
                        new_chain,
                        new_pos,
                        new_gain,
                    )
                )
                new_frontier.append((new_chain, new_pos, new_gain))
        frontier = new_frontier
    return sources


def _chain_images(env: EnvironmentModel, src: ImageSource) -> list:
    """Image positions [I_0 .. I_order]; I_0 is the transmitter, I_order = src.position.

    Recovered by un-mirroring (mirroring is an involution), so no separate
    transmitter argument is needed.
    """
    images = [src.position]
    pos = src.position
    for fid in reversed(src.facet_chain):
        pos = mirror_point(pos, env.facet_by_id(fid))
        images.append(pos)
    images.reverse()
    return images


def _plane_hits(origins, targets, facet, t_lo=0.0, t_hi=1.0):
    """Segment-plane intersection, vectorized over segments.

    Returns (valid, t, points): valid marks segments that cross the facet
    plane with parameter in [t_lo, t_hi] and whose crossing point lies inside
    the polygon.
    """
    n = facet.normal
    p0 = facet.plane_point
    d = targets - origins
    denom = d @ n
    num = (p0 - origins) @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / denom
        valid = (np.abs(denom) > 1e-300) & (t >= t_lo) & (t <= t_hi)
        pts = origins + t[:, None] * d
    if valid.any():
        valid[valid] &= facet.contains(pts[valid])
    return valid, t, pts


def _occluded(origins, targets, env: EnvironmentModel) -> np.ndarray:
    """True per segment if any facet crosses it away from both endpoints."""
    blocked = np.zeros(len(origins), dtype=bool)
    seg_len = np.linalg.norm(targets - origins, axis=1)
    for facet in env.facets:
        todo = ~blocked
        if not todo.any():
            break
        valid, t, _ = _plane_hits(origins[todo], targets[todo], facet)
        along = t * seg_len[todo]
        hit = valid & (along > ENDPOINT_EPS) & (seg_len[todo] - along > ENDPOINT_EPS)
        blocked[todo] |= hit
    return blocked


def trace_paths(env: EnvironmentModel, src: ImageSource, rx_points) -> tuple:
    """Trace the specular path of one image source to many receive points.

    Returns (ok, lengths, bounce_points) with shapes (E,), (E,) and
    (E, order, 3); lengths are NaN where no valid path exists.
    """
    rx = np.atleast_2d(np.asarray(rx_points, dtype=float))
    E = len(rx)
    order = src.order
    images = _chain_images(env, src)
    ok = np.ones(E, dtype=bool)
    bounce = np.full((E, order, 3), np.nan)

    # Unfold: aim at successively lower-order images; each leg must bounce
    # inside its facet.
    current = rx.copy()
    for k in range(order, 0, -1):
        facet = env.facet_by_id(src.facet_chain[k - 1])
        valid, _, pts = _plane_hits(current[ok], np.broadcast_to(images[k], (ok.sum(), 3)), facet)
        idx = np.flatnonzero(ok)
        ok[idx[~valid]] = False
        keep = idx[valid]
        bounce[keep, k - 1] = pts[valid]
        current[keep] = pts[valid]

    # Occlusion test on every leg of the unfolded path.
    waypoints = [rx] + [bounce[:, k] for k in range(order - 1, -1, -1)] + [
        np.broadcast_to(images[0], (E, 3))
    ]
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        if not ok.any():
            break
        idx = np.flatnonzero(ok)
        ok[idx[_occluded(a[idx], b[idx], env)]] = False

    lengths = np.full(E, np.nan)
    if ok.any():
        total = np.zeros(ok.sum())
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            total += np.linalg.norm(b[ok] - a[ok], axis=1)
        lengths[ok] = total
    return ok, lengths, bounce


def trace_specular_path(env: EnvironmentModel, src: ImageSource, rx) -> Optional[SpecularPath]:
    """Trace a single specular path; None if blocked or off-facet."""
    rx = _as_point(rx)
    ok, lengths, bounce = trace_paths(env, src, rx[None, :])
    if not ok[0]:
        return None
    images = _chain_images(env, src)
    pts = np.vstack([rx] + [bounce[0, k] for k in range(src.order - 1, -1, -1)] + [images[0]])
    length = float(lengths[0])
    return SpecularPath(points=pts, length=length, delay=length / SPEED_OF_LIGHT)


def visibility_mask(env: EnvironmentModel, ue, element_positions, sources) -> dict:
    """Per-component, per-element path existence.

    Returns {component_id: bool array over elements}.  The ue argument is
    kept for interface clarity; sources must have been computed for it.
    """
    ue = _as_point(ue)
    elems = np.atleast_2d(np.asarray(element_positions, dtype=float))
    mask = {}
    for src in sources:
        if src.order == 0 and not np.allclose(src.position, ue):
            raise InvalidGeometryError("order-0 source position differs from ue")
        ok, _, _ = trace_paths(env, src, elems)
        mask[src.component_id] = ok
    return mask
