"""Scenario configuration: one JSON document driving the whole pipeline.

Angles in the file are degrees; they are converted to radians on load.
Synthesis and estimation bands must lie inside the declared system range
(default 3-10 GHz).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .arrays import AntennaPattern, ArrayGeometry
from .assoc import Gates
from .beamform import SpectrumGrid
from .errors import ConfigError
from .fileio import array_from_config
from .sbl import SBLConfig
from .synth import DiffuseSpec
from . import scenes

SYSTEM_BAND_HZ = (3e9, 10e9)

DEFAULT_F_C = 6.95e9
DEFAULT_BEAMFORM_BAND = 3e9
DEFAULT_SBL_BAND = 500e6


@dataclass(frozen=True)
class ScenarioConfig:
    environment_path: str
    ue: tuple  # (x, y, z) meters
    array: ArrayGeometry
    rx_pattern: AntennaPattern
    tx_pattern: AntennaPattern
    band_hz: float
    n_freqs: int
    max_order: int
    noise_var: float
    diffuse: DiffuseSpec
    subarray_size: int
    sbl: SBLConfig
    gates: Gates
    beam_grid: SpectrumGrid
    beam_db_scale: bool
    seed: int
    system_band_hz: tuple = SYSTEM_BAND_HZ

    @property
    def freqs(self) -> np.ndarray:
        f_c = self.array.f_c
        return np.linspace(
            f_c - self.band_hz / 2.0, f_c + self.band_hz / 2.0, self.n_freqs
        )

    def sbl_freqs(self) -> np.ndarray:
        """Sub-band of the synthesis grid used by the per-subarray estimator."""
        f = self.freqs
        half = self.sbl.band_hz / 2.0
        keep = np.abs(f - self.array.f_c) <= half + 1e-6
        if keep.sum() < 2:
            raise ConfigError("estimation band selects fewer than 2 frequencies")
        return f[keep]

    def sbl_band_slice(self) -> np.ndarray:
        f = self.freqs
        half = self.sbl.band_hz / 2.0
        return np.abs(f - self.array.f_c) <= half + 1e-6


def _resolve_environment(name: str) -> str:
    if name in scenes.BUILTIN_SCENES:
        return scenes.scene_path(name)
    return name


def _resolve_ue(doc, env_name: str):
    if isinstance(doc, (list, tuple)):
        if len(doc) != 3:
            raise ConfigError(f"ue position must have 3 coordinates, got {doc!r}")
        return tuple(float(v) for v in doc)
    if isinstance(doc, dict) and "preset" in doc:
        xy = doc.get("xy")
        return scenes.ue_position(doc["preset"], scene=env_name if env_name in scenes.BUILTIN_SCENES else None, xy=xy)
    if isinstance(doc, str):
        return scenes.ue_position(doc)
    raise ConfigError(f"cannot interpret ue position {doc!r}")


def load_scenario_doc(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {path}: line {exc.lineno}: {exc.msg}")


def apply_overrides(doc: dict, assignments) -> dict:
    """Apply `dotted.path=value` overrides to a scenario document.

    Values parse as JSON where possible (numbers, lists, booleans), else as
    plain strings; intermediate mappings are created as needed.
    """
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.strip().split(".")
        node = doc
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r}: {p!r} is not a mapping")
            node = nxt
        node[parts[-1]] = value
    return doc


def load_scenario(path, overrides=None) -> ScenarioConfig:
    doc = apply_overrides(load_scenario_doc(path), overrides)
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    env_name = doc.get("environment", "medium_like")
    env_path = _resolve_environment(env_name)
    if not os.path.exists(env_path):
        raise ConfigError(f"environment file does not exist: {env_path}")

    arr_doc = dict(doc.get("array", {}))
    arr_doc.setdefault("rows", 16)
    arr_doc.setdefault("cols", 24)
    arr_doc.setdefault("f_c_hz", DEFAULT_F_C)
    arr_doc.setdefault("origin", (0.0, 0.0, 1.5))
    arr_doc.setdefault("boresight", (1.0, 0.0, 0.0))
    array, rx_pattern = array_from_config(arr_doc)

    tx_doc = doc.get("tx_pattern", {"kind": "isotropic"})
    tx_pattern = AntennaPattern(
        kind=tx_doc.get("kind", "isotropic"),
        q=float(tx_doc.get("q", 2.0)),
        back_floor=float(tx_doc.get("back_floor", 0.0)),
    )

    synth_doc = doc.get("synth", {})
    # default synthesis band covers the full beamforming bandwidth; the
    # estimator extracts its narrower sub-band around the carrier
    band_hz = float(synth_doc.get("band_hz", DEFAULT_BEAMFORM_BAND))
    n_freqs = int(synth_doc.get("n_freqs", 256))
    max_order = int(synth_doc.get("max_order", 1))
    noise_var = float(synth_doc.get("noise_var", 0.0))
    dif_doc = synth_doc.get("diffuse", {})
    diffuse = DiffuseSpec(
        onset_s=float(dif_doc.get("onset_s", 0.0)),
        power=float(dif_doc.get("power", 0.0)),
        decay_s=float(dif_doc.get("decay_s", 1e-8)),
        enabled=bool(dif_doc.get("enabled", False)),
    )

    sbl_doc = doc.get("sbl", {})
    sbl_cfg = SBLConfig(
        k_max=int(sbl_doc.get("k_max", 20)),
        band_hz=float(sbl_doc.get("band_hz", min(DEFAULT_SBL_BAND, band_hz))),
        convergence_tol=float(sbl_doc.get("convergence_tol", 1e-4)),
        max_iters=int(sbl_doc.get("max_iters", 200)),
        prune_threshold_db=float(sbl_doc.get("prune_threshold_db", 3.0)),
    )

    subarray_size = int(doc.get("subarray_size", 4))

    gates_doc = doc.get("gates", {})
    gates = Gates(
        delay_s=float(gates_doc.get("delay_s", 2.0 / sbl_cfg.band_hz)),
        azimuth_rad=math.radians(float(gates_doc.get("azimuth_deg", 5.0))),
        elevation_rad=math.radians(float(gates_doc.get("elevation_deg", 5.0))),
    )

    beam_doc = doc.get("beamform", {})

    def axis(key, default_start, default_stop, default_n, to_rad=False):
        spec = beam_doc.get(key, [default_start, default_stop, default_n])
        try:
            start, stop, count = float(spec[0]), float(spec[1]), int(spec[2])
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"beamform axis {key!r}: {exc}")
        vals = np.linspace(start, stop, count)
        return np.radians(vals) if to_rad else vals

    beam_grid = SpectrumGrid(
        azimuths=axis("az_deg", -60.0, 60.0, 25, to_rad=True),
        elevations=axis("el_deg", -40.0, 40.0, 17, to_rad=True),
        distances=axis("dist_m", 1.0, 8.0, 15),
    )
    beam_db = bool(beam_doc.get("db_scale", False))

    seed = int(doc.get("seed", 0))
    system_band = tuple(doc.get("system_band_hz", SYSTEM_BAND_HZ))

    cfg = ScenarioConfig(
        environment_path=env_path,
        ue=_resolve_ue(doc.get("ue", {"preset": "M1"}), env_name),
        array=array,
        rx_pattern=rx_pattern,
        tx_pattern=tx_pattern,
        band_hz=band_hz,
        n_freqs=n_freqs,
        max_order=max_order,
        noise_var=noise_var,
        diffuse=diffuse,
        subarray_size=subarray_size,
        sbl=sbl_cfg,
        gates=gates,
        beam_grid=beam_grid,
        beam_db_scale=beam_db,
        seed=seed,
        system_band_hz=system_band,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    lo, hi = cfg.system_band_hz
    f_c = cfg.array.f_c
    for label, band in (("synthesis", cfg.band_hz), ("estimation", cfg.sbl.band_hz)):
        if f_c - band / 2.0 < lo - 1e-6 or f_c + band / 2.0 > hi + 1e-6:
            raise ConfigError(
                f"{label} band {band / 1e9:.3f} GHz at f_c {f_c / 1e9:.3f} GHz "
                f"falls outside the system range {lo / 1e9:.1f}-{hi / 1e9:.1f} GHz"
            )
    if cfg.n_freqs < 2:
        raise ConfigError("need at least 2 frequency samples")
    if cfg.max_order not in (0, 1, 2):
        raise ConfigError("max_order must be 0, 1, or 2")
    if cfg.noise_var < 0:
        raise ConfigError("noise_var must be >= 0")
    if cfg.subarray_size > min(cfg.array.rows, cfg.array.cols):
        raise ConfigError("subarray_size exceeds the array dimensions")
