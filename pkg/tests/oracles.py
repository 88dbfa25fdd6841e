"""Independent oracles for cross-checking the production implementations.

Deliberately written on different foundations than the package: shapely for
point-in-polygon, dense segment sampling for occlusion, plain per-entry
loops for spectra and synthesis, exhaustive pair enumeration for
association.  Slow but obviously correct.
"""

import cmath
import math

import numpy as np
from shapely.geometry import Point, Polygon as ShPolygon

C = 299792458.0


# ------------------------------------------------------------------- geometry

def plane_of(vertices):
    """(unit normal, point) of the best-fit plane through polygon vertices."""
    v = np.asarray(vertices, dtype=float)
    ctr = v.mean(axis=0)
    _, _, vt = np.linalg.svd(v - ctr)
    return vt[-1], ctr


def mirror_across(p, vertices):
    n, ctr = plane_of(vertices)
    return np.asarray(p, float) - 2.0 * np.dot(np.asarray(p, float) - ctr, n) * n


def _poly2d(vertices):
    n, ctr = plane_of(vertices)
    ref = vertices[0] - ctr
    e1 = ref / np.linalg.norm(ref)
    e2 = np.cross(n, e1)
    pts = [((v - ctr) @ e1, (v - ctr) @ e2) for v in vertices]
    return ShPolygon(pts), n, ctr, e1, e2


def point_in_facet(point, vertices, tol=1e-9):
    poly, n, ctr, e1, e2 = _poly2d(np.asarray(vertices, float))
    rel = np.asarray(point, float) - ctr
    if abs(rel @ n) > tol:
        return False
    p2 = Point(rel @ e1, rel @ e2)
    return poly.buffer(tol).contains(p2) or poly.touches(p2) or poly.contains(p2)


def segment_hits_facet(a, b, vertices, end_eps=1e-6):
    """Dense-sampling crossing test: does segment a->b cross the polygon
    away from both endpoints?"""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n, ctr = plane_of(np.asarray(vertices, float))
    da = (a - ctr) @ n
    db = (b - ctr) @ n
    if da * db > 0 or (da == 0 and db == 0):
        return False
    t = da / (da - db)
    hit = a + t * (b - a)
    seglen = np.linalg.norm(b - a)
    along = t * seglen
    if along <= end_eps or seglen - along <= end_eps:
        return False
    return point_in_facet(hit, vertices)


def trace_chain(env_facets, chain_vertices, ue, rx, end_eps=1e-6):
    """Unfold a specular chain; None if a bounce leaves its facet or any
    segment is occluded.  chain_vertices: list of vertex arrays, tx-to-rx
    order.  Returns the full point list [rx, bounces..., ue]."""
    images = [np.asarray(ue, float)]
    for verts in chain_vertices:
        images.append(mirror_across(images[-1], verts))
    pts = [np.asarray(rx, float)]
    current = pts[0]
    for k in range(len(chain_vertices), 0, -1):
        verts = chain_vertices[k - 1]
        n, ctr = plane_of(np.asarray(verts, float))
        d = images[k] - current
        denom = d @ n
        if abs(denom) < 1e-15:
            return None
        t = ((ctr - current) @ n) / denom
        if not 0.0 <= t <= 1.0:
            return None
        hit = current + t * d
        if not point_in_facet(hit, verts):
            return None
        pts.append(hit)
        current = hit
    pts.append(images[0])
    for a, b in zip(pts[:-1], pts[1:]):
        for verts in env_facets:
            if segment_hits_facet(a, b, verts, end_eps):
                return None
    return pts


def chain_enumeration(n_facets, max_order):
    """All facet-index chains with no immediate repeats, grouped by order."""
    chains = [[()]]
    for _ in range(max_order):
        prev = chains[-1]
        nxt = []
        for ch in prev:
            for i in range(n_facets):
                if ch and ch[-1] == i:
                    continue
                nxt.append(ch + (i,))
        chains.append(nxt)
    return chains


# ----------------------------------------------------------------- beamformer

def spectrum_direct(H, elem_pos, freqs, az_ax, el_ax, dist_ax, ref):
    """Direct-sum spherical spectrum, loops over grid and elements."""
    M, N = H.shape
    out = np.empty((len(az_ax), len(el_ax), len(dist_ax)))
    for i, az in enumerate(az_ax):
        for j, el in enumerate(el_ax):
            u = np.array(
                [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
            )
            for k, dist in enumerate(dist_ax):
                p = ref + dist * u
                acc = 0.0 + 0.0j
                for m in range(M):
                    d = np.linalg.norm(p - elem_pos[m])
                    acc += np.sum(H[m] * np.exp(1j * 2 * np.pi * freqs * d / C))
                out[i, j, k] = abs(acc) ** 2 / (M * N) ** 2
    return out


def marginals_loops(power):
    na, ne, nd = power.shape
    az_el = np.full((na, ne), -np.inf)
    az_d = np.full((na, nd), -np.inf)
    el_d = np.full((ne, nd), -np.inf)
    for i in range(na):
        for j in range(ne):
            for k in range(nd):
                az_el[i, j] = max(az_el[i, j], power[i, j, k])
                az_d[i, k] = max(az_d[i, k], power[i, j, k])
                el_d[j, k] = max(el_d[j, k], power[i, j, k])
    return az_el, az_d, el_d


# ------------------------------------------------------------------ synthesis

def synth_direct(components, freqs):
    """Triple-loop specular sum.  components: list of dicts with per-element
    arrays 'visible', 'amplitude', 'delay'."""
    M = len(components[0]["visible"])
    N = len(freqs)
    H = np.zeros((M, N), dtype=complex)
    for comp in components:
        for m in range(M):
            if not comp["visible"][m]:
                continue
            for n in range(N):
                H[m, n] += comp["amplitude"][m] * cmath.exp(
                    -2j * math.pi * freqs[n] * comp["delay"][m]
                )
    return H


# ---------------------------------------------------------------- association

def associate_exhaustive(estimates, predictions, gates):
    """Reference gated greedy matching via exhaustive pair enumeration."""
    rows = []
    for pi, pred in enumerate(predictions):
        for ei, est in enumerate(estimates):
            d = max(
                abs(est["delay"] - pred["delay"]) / gates[0],
                abs(est["az"] - pred["az"]) / gates[1],
                abs(est["el"] - pred["el"]) / gates[2],
            )
            if d <= 1.0:
                rows.append((d, pred["delay"], pred["az"], pred["el"], ei, pi))
    rows.sort()
    match = {}
    used_e = set()
    for d, _, _, _, ei, pi in rows:
        if ei in used_e or pi in match:
            continue
        match[pi] = ei
        used_e.add(ei)
    return match
