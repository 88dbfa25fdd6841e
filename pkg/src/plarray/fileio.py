"""File formats: environments, channel tensors, estimates, maps, reports.

All on-disk angles are degrees (human-facing); in-memory values are radians.
Channel tensors round-trip bit-exactly: a single JSON header line followed by
raw little-endian float64 (re, im) pairs, element-major then frequency.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math

import numpy as np

from .arrays import AntennaPattern, ArrayGeometry, frame_from_boresight, make_ura
from .beamform import BeamSpectrum
from .errors import ConfigError, InvalidGeometryError
from .geometry import EnvironmentModel, Facet
from .sbl import MPCEstimate, SubarrayResult
from .synth import ChannelTensor

_MAGIC = "plarray-tensor-v1"


def _complex_to_json(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _complex_from_json(obj) -> complex:
    if isinstance(obj, dict):
        return complex(obj.get("re", 0.0), obj.get("im", 0.0))
    return complex(obj)


# ---------------------------------------------------------------- environments

def load_environment(path) -> EnvironmentModel:
    """Load and validate an environment JSON; errors name the offending facet."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"environment file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"environment file {path}: line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict) or "facets" not in doc:
        raise ConfigError(f"environment file {path}: missing 'facets' list")
    facets = []
    for entry in doc["facets"]:
        fid = entry.get("id", "<missing id>")
        try:
            facets.append(
                Facet(
                    id=fid,
                    name=entry.get("name", fid),
                    vertices=np.asarray(entry["vertices"], dtype=float),
                    reflection_coeff=_complex_from_json(entry.get("reflection_coeff", 1.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidGeometryError):
                raise
            raise InvalidGeometryError(f"facet {fid!r}: {exc}")
    return EnvironmentModel(facets=tuple(facets), name=doc.get("name", ""))


def save_environment(env: EnvironmentModel, path) -> None:
    doc = {
        "name": env.name,
        "facets": [
            {
                "id": f.id,
                "name": f.name,
                "vertices": f.vertices.tolist(),
                "reflection_coeff": _complex_to_json(f.reflection_coeff),
            }
            for f in env.facets
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# -------------------------------------------------------------- array configs

def array_from_config(doc: dict) -> tuple:
    """(ArrayGeometry, AntennaPattern) from an array config mapping."""
    try:
        rows = int(doc["rows"])
        cols = int(doc["cols"])
        f_c = float(doc["f_c_hz"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"array config: {exc}")
    origin = doc.get("origin", (0.0, 0.0, 0.0))
    boresight = doc.get("boresight", (1.0, 0.0, 0.0))
    pat = doc.get("pattern", {})
    pattern = AntennaPattern(
        kind=pat.get("kind", "isotropic"),
        q=float(pat.get("q", 2.0)),
        back_floor=float(pat.get("back_floor", 0.0)),
    )
    frame = frame_from_boresight(boresight)
    return make_ura(rows, cols, f_c, origin, frame), pattern


# ------------------------------------------------------------- channel tensors

def save_tensor(tensor: ChannelTensor, path) -> None:
    header = {
        "format": _MAGIC,
        "n_elements": tensor.n_elements,
        "n_freqs": tensor.n_freqs,
        "freq_start": float(tensor.freqs[0]),
        "freq_step": float(tensor.freqs[1] - tensor.freqs[0]),
        "metadata": tensor.metadata,
        "element_positions": tensor.element_positions.tolist(),
    }
    payload = np.empty((tensor.n_elements, tensor.n_freqs, 2), dtype="<f8")
    payload[:, :, 0] = tensor.H.real
    payload[:, :, 1] = tensor.H.imag
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload.tobytes())


def load_tensor(path) -> ChannelTensor:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        raw = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"tensor file {path}: bad header ({exc})")
    if header.get("format") != _MAGIC:
        raise ConfigError(f"tensor file {path}: unknown format {header.get('format')!r}")
    m, n = header["n_elements"], header["n_freqs"]
    expected = m * n * 2 * 8
    if len(raw) != expected:
        raise ConfigError(
            f"tensor file {path}: payload is {len(raw)} bytes, expected {expected}"
        )
    flat = np.frombuffer(raw, dtype="<f8").reshape(m, n, 2)
    H = flat[:, :, 0] + 1j * flat[:, :, 1]
    freqs = header["freq_start"] + header["freq_step"] * np.arange(n)
    return ChannelTensor(
        freqs=freqs,
        H=H,
        element_positions=np.asarray(header["element_positions"], dtype=float),
        metadata=header.get("metadata", {}),
    )


# ---------------------------------------------------------- estimates (JSONL)

def _estimate_to_json(est: MPCEstimate) -> dict:
    return {
        "delay_s": est.delay,
        "azimuth_deg": math.degrees(est.azimuth),
        "elevation_deg": math.degrees(est.elevation),
        "amplitude": _complex_to_json(est.amplitude),
        "gamma": est.gamma,
        "component_snr_db": est.component_snr_db,
    }


def _estimate_from_json(doc: dict) -> MPCEstimate:
    return MPCEstimate(
        delay=float(doc["delay_s"]),
        azimuth=math.radians(float(doc["azimuth_deg"])),
        elevation=math.radians(float(doc["elevation_deg"])),
        amplitude=_complex_from_json(doc["amplitude"]),
        gamma=float(doc["gamma"]),
        component_snr_db=float(doc["component_snr_db"]),
    )


def save_results_jsonl(results, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(
                json.dumps(
                    {
                        "subarray_index": r.subarray_index,
                        "noise_var": r.noise_var,
                        "residual_energy_frac": r.residual_energy_frac,
                        "total_energy": r.total_energy,
                        "estimates": [_estimate_to_json(e) for e in r.estimates],
                    }
                )
            )
            fh.write("\n")


def load_results_jsonl(path) -> list:
    results = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            results.append(
                SubarrayResult(
                    subarray_index=int(doc["subarray_index"]),
                    estimates=tuple(_estimate_from_json(e) for e in doc["estimates"]),
                    noise_var=float(doc["noise_var"]),
                    residual_energy_frac=float(doc["residual_energy_frac"]),
                    total_energy=float(doc["total_energy"]),
                )
            )
    return results


# ------------------------------------------------------------------- CSV exports

def _power_values(block: np.ndarray, db_scale: bool) -> np.ndarray:
    if not db_scale:
        return block
    peak = block.max()
    if peak <= 0:
        return np.full_like(block, -300.0)
    return 10.0 * np.log10(np.maximum(block / peak, 1e-30))


def save_marginals_csv(spec: BeamSpectrum, margs: dict, path, db_scale: bool = False) -> None:
    """All three marginal spectra in one CSV; axis values in degrees/meters.

    Each section: a title row, a header row with the column axis, then one
    row per row-axis value.  Values are linear power, or max-normalized dB
    when db_scale is set.
    """
    az = np.degrees(spec.grid.azimuths)
    el = np.degrees(spec.grid.elevations)
    dist = spec.grid.distances
    sections = [
        ("az_el", "azimuth_deg", az, "elevation_deg", el, margs["az_el"]),
        ("az_dist", "azimuth_deg", az, "distance_m", dist, margs["az_dist"]),
        ("el_dist", "elevation_deg", el, "distance_m", dist, margs["el_dist"]),
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for name, row_name, row_ax, col_name, col_ax, block in sections:
            w.writerow([f"#marginal={name}", f"scale={'db' if db_scale else 'linear'}"])
            w.writerow([f"{row_name}\\{col_name}"] + [repr(float(v)) for v in col_ax])
            vals = _power_values(block, db_scale)
            for rv, row in zip(row_ax, vals):
                w.writerow([repr(float(rv))] + [repr(float(v)) for v in row])


def save_maps_csv(maps: dict, path) -> None:
    """Per-component subarray amplitude grids; unassociated cells are blank."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for cid in maps:
            grid = maps[cid]
            w.writerow([f"#component={cid}", f"rows={grid.shape[0]}", f"cols={grid.shape[1]}"])
            for row in grid:
                w.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])


def load_maps_csv(path) -> dict:
    maps = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        current = None
        rows = []
        for row in csv.reader(fh):
            if row and row[0].startswith("#component="):
                if current is not None:
                    maps[current] = np.array(rows, dtype=float)
                current = row[0].split("=", 1)[1]
                rows = []
            else:
                rows.append([np.nan if c == "" else float(c) for c in row])
        if current is not None:
            maps[current] = np.array(rows, dtype=float)
    return maps


def save_energy_report_csv(report, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "mean_pct", "std_pct"])
        for cid in report.component_mean_pct:
            w.writerow(
                [cid, repr(float(report.component_mean_pct[cid])), repr(float(report.component_std_pct[cid]))]
            )
        w.writerow(["<total estimated>", repr(float(report.total_mean_pct)), repr(float(report.total_std_pct))])
        w.writerow(["<residual>", repr(float(report.residual_mean_pct)), repr(float(report.residual_std_pct))])
        w.writerow(["<n_subarrays>", report.n_subarrays, ""])
        if report.correlated_energy_flag:
            w.writerow(["#warning", "correlated atoms: captured + residual exceeds 100%", ""])


def format_energy_report(report) -> str:
    """Fixed-width table of the energy report."""
    lines = [f"{'component':<24}{'mean %':>10}{'std %':>10}"]
    for cid in report.component_mean_pct:
        lines.append(
            f"{cid:<24}{report.component_mean_pct[cid]:>10.2f}"
            f"{report.component_std_pct[cid]:>10.2f}"
        )
    lines.append(
        f"{'total estimated':<24}{report.total_mean_pct:>10.2f}{report.total_std_pct:>10.2f}"
    )
    lines.append(
        f"{'residual':<24}{report.residual_mean_pct:>10.2f}{report.residual_std_pct:>10.2f}"
    )
    lines.append(f"subarrays: {report.n_subarrays}")
    if report.correlated_energy_flag:
        lines.append("warning: correlated atoms; captured + residual exceeds 100%")
    return "\n".join(lines)


# ----------------------------------------------------------------- visibility

def save_visibility_json(mask: dict, grids: dict, path) -> None:
    """Element-level masks plus subarray majority grids per component."""
    doc = {
        "element_mask": {cid: np.asarray(v, dtype=bool).astype(int).tolist() for cid, v in mask.items()},
        "subarray_grid": {cid: np.asarray(g, dtype=bool).astype(int).tolist() for cid, g in grids.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_visibility_json(path) -> tuple:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    mask = {cid: np.asarray(v, dtype=bool) for cid, v in doc["element_mask"].items()}
    grids = {cid: np.asarray(g, dtype=bool) for cid, g in doc["subarray_grid"].items()}
    return mask, grids


# -------------------------------------------------------------------- hashing

def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
