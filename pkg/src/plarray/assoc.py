"""Associate per-subarray estimates with geometric predictions and report.

Predictions come from tracing each image source to the subarray centroid.
Association is gated greedy nearest-neighbor in normalized (delay, azimuth,
elevation) distance, one-to-one per subarray.  Downstream products: per-
component amplitude/visibility maps over the subarray grid, energy tables
(mean/std percentages over subarrays), and a mismatch score between
geometric and estimated visibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arrays import ArrayGeometry, Subarray
from .geometry import SPEED_OF_LIGHT, EnvironmentModel, trace_specular_path
from .sbl import MPCEstimate, SubarrayResult, component_energy_frac
from .synth import path_params


@dataclass(frozen=True)
class Prediction:
    component_id: str
    delay: float
    azimuth: float
    elevation: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.delay, self.azimuth, self.elevation)):
            raise ValueError(f"prediction {self.component_id!r} has non-finite fields")


@dataclass(frozen=True)
class Gates:
    delay_s: float
    azimuth_rad: float
    elevation_rad: float

    def __post_init__(self):
        if min(self.delay_s, self.azimuth_rad, self.elevation_rad) <= 0:
            raise ValueError("gates must be positive")

    def scaled(self, factor: float) -> "Gates":
        return Gates(self.delay_s * factor, self.azimuth_rad * factor, self.elevation_rad * factor)


@dataclass(frozen=True)
class AssociationResult:
    """Per-subarray association: component -> matched estimate (or None)."""

    subarray_index: int
    matched: dict  # component_id -> MPCEstimate | None
    predictions: dict  # component_id -> Prediction
    unassociated: tuple  # estimates not matched to any prediction
    matched_energy_frac: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EnergyReport:
    component_mean_pct: dict  # component_id -> mean %
    component_std_pct: dict
    residual_mean_pct: float
    residual_std_pct: float
    total_mean_pct: float  # all estimated components, associated or not
    total_std_pct: float
    n_subarrays: int
    correlated_energy_flag: bool  # captured + residual materially exceeds 100%


def predict(env: EnvironmentModel, ue, sub: Subarray, sources, arr: ArrayGeometry) -> list:
    """One prediction per image source whose path reaches the subarray centroid."""
    out = []
    for src in sources:
        path = trace_specular_path(env, src, sub.centroid)
        if path is None:
            continue
        delay, az, el, _ = path_params(src, path, sub.centroid, frame=arr.frame)
        out.append(Prediction(src.component_id, delay, az, el))
    return out


def associate(estimates, predictions, gates: Gates):
    """Greedy one-to-one gated matching in normalized parameter distance.

    Distance is max(|d_delay|/gate, |d_az|/gate, |d_el|/gate); only pairs
    with distance <= 1 match, in ascending distance.  Ties prefer the
    prediction with lower (delay, azimuth, elevation), then earlier estimates.
    Returns ({component_id: estimate or None}, [unassociated estimates]).
    """
    pairs = []
    for pi, pred in enumerate(predictions):
        for ei, est in enumerate(estimates):
            d = max(
                abs(est.delay - pred.delay) / gates.delay_s,
                abs(est.azimuth - pred.azimuth) / gates.azimuth_rad,
                abs(est.elevation - pred.elevation) / gates.elevation_rad,
            )
            if d <= 1.0:
                pairs.append(
                    (d, pred.delay, pred.azimuth, pred.elevation, ei, pi)
                )
    pairs.sort()
    matched = {pred.component_id: None for pred in predictions}
    used_est = set()
    used_pred = set()
    for d, _, _, _, ei, pi in pairs:
        if ei in used_est or pi in used_pred:
            continue
        matched[predictions[pi].component_id] = estimates[ei]
        used_est.add(ei)
        used_pred.add(pi)
    unassociated = [est for ei, est in enumerate(estimates) if ei not in used_est]
    return matched, unassociated


def associate_subarray(
    result: SubarrayResult, predictions, gates: Gates
) -> AssociationResult:
    matched, unassociated = associate(list(result.estimates), predictions, gates)
    est_index = {id(e): i for i, e in enumerate(result.estimates)}
    frac = {
        cid: component_energy_frac(result, est_index[id(est)])
        for cid, est in matched.items()
        if est is not None
    }
    return AssociationResult(
        subarray_index=result.subarray_index,
        matched=matched,
        predictions={p.component_id: p for p in predictions},
        unassociated=tuple(unassociated),
        matched_energy_frac=frac,
    )


def _subarray_grid(arr: ArrayGeometry, subarrays) -> tuple:
    size = int(round(np.sqrt(subarrays[0].n_elements)))
    return arr.rows // size, arr.cols // size


def visibility_and_amplitude_maps(
    results,
    associations,
    arr: ArrayGeometry,
    subarrays,
    compensate_pathloss: bool = False,
) -> dict:
    """Per-component grids of |amplitude| per subarray; NaN where unassociated.

    With compensate_pathloss the estimated amplitude is multiplied by
    4 pi f_c d / c (d = predicted path length), undoing free-space loss so
    visibility structure stands out.  Empty (NaN) cells are the estimated
    invisibility region.
    """
    n_br, n_bc = _subarray_grid(arr, subarrays)
    comp_ids = []
    for assoc in associations:
        for cid in assoc.matched:
            if cid not in comp_ids:
                comp_ids.append(cid)
    maps = {cid: np.full((n_br, n_bc), np.nan) for cid in comp_ids}
    for assoc in associations:
        br, bc = divmod(assoc.subarray_index, n_bc)
        for cid, est in assoc.matched.items():
            if est is None:
                continue
            value = abs(est.amplitude)
            if compensate_pathloss:
                d = assoc.predictions[cid].delay * SPEED_OF_LIGHT
                value *= 4.0 * np.pi * arr.f_c * d / SPEED_OF_LIGHT
            maps[cid][br, bc] = value
    return maps


def subarray_visibility(element_mask: np.ndarray, arr: ArrayGeometry, subarrays) -> np.ndarray:
    """Majority-vote geometric visibility per subarray, on the subarray grid."""
    n_br, n_bc = _subarray_grid(arr, subarrays)
    grid = np.zeros((n_br, n_bc), dtype=bool)
    mask = np.asarray(element_mask, dtype=bool)
    for sub in subarrays:
        br, bc = divmod(sub.index, n_bc)
        grid[br, bc] = mask[sub.element_indices].mean() >= 0.5
    return grid


def energy_report(results, associations, top_k: int = 6) -> EnergyReport:
    """Mean/std component energy percentages over subarrays.

    Components are ranked by mean captured energy and truncated to top_k;
    subarrays where a component is unassociated contribute 0%.  The total
    row counts every estimate, associated or not.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not results:
        raise ValueError("no subarray results to report")
    n_s = len(results)
    comp_values = {}
    for assoc in associations:
        for cid in assoc.matched:
            comp_values.setdefault(cid, np.zeros(n_s))
    for i, assoc in enumerate(associations):
        for cid, frac in assoc.matched_energy_frac.items():
            comp_values[cid][i] = 100.0 * frac
    residual = np.array([100.0 * r.residual_energy_frac for r in results])
    total = np.array(
        [
            100.0 * sum(abs(e.amplitude) ** 2 for e in r.estimates)
            / r.total_energy if r.total_energy > 0 else 0.0
            for r in results
        ]
    )
    ranked = sorted(comp_values, key=lambda cid: -comp_values[cid].mean())[:top_k]
    return EnergyReport(
        component_mean_pct={cid: float(comp_values[cid].mean()) for cid in ranked},
        component_std_pct={cid: float(comp_values[cid].std()) for cid in ranked},
        residual_mean_pct=float(residual.mean()),
        residual_std_pct=float(residual.std()),
        total_mean_pct=float(total.mean()),
        total_std_pct=float(total.std()),
        n_subarrays=n_s,
        correlated_energy_flag=bool(np.any(total + residual > 101.0)),
    )


def mismatch_score(visibility_grid: np.ndarray, amplitude_map: np.ndarray) -> float:
    """Fraction of subarrays where geometric visibility and estimation disagree."""
    vis = np.asarray(visibility_grid, dtype=bool)
    amp = np.asarray(amplitude_map, dtype=float)
    if vis.shape != amp.shape:
        raise ValueError(f"grid shapes differ: {vis.shape} vs {amp.shape}")
    present = ~np.isnan(amp)
    return float(np.mean(vis != present))
