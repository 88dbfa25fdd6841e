"""Batch pipeline: synth -> visibility -> beamform -> estimate -> associate -> report.

Each stage writes one artifact into the working directory; a manifest
records their SHA-256 hashes.  All stages are deterministic for a fixed
scenario and seed, regardless of the parallelism degree.
"""

from __future__ import annotations

import json
import os

from . import assoc, beamform, fileio, sbl
from .arrays import partition_subarrays
from .config import ScenarioConfig
from .errors import DependencyError
from .geometry import compute_image_sources, visibility_mask
from .synth import synthesize

STAGES = ("synth", "visibility", "beamform", "estimate", "associate", "report")

ARTIFACTS = {
    "synth": "tensor.cft",
    "visibility": "visibility.json",
    "beamform": "beam_marginals.csv",
    "estimate": "estimates.jsonl",
    "associate": "amplitude_maps.csv",
    "report": "energy_report.csv",
}

_STAGE_DEPS = {
    "beamform": ("synth",),
    "estimate": ("synth",),
    "associate": ("estimate",),
    "report": ("estimate",),
}


def _artifact(workdir, stage) -> str:
    return os.path.join(workdir, ARTIFACTS[stage])


def _require(workdir, stage, needed_by) -> str:
    path = _artifact(workdir, stage)
    if not os.path.exists(path):
        raise DependencyError(
            f"stage {needed_by!r} needs {ARTIFACTS[stage]!r}; run the {stage!r} stage first"
        )
    return path


def _stage_synth(cfg: ScenarioConfig, workdir, seed, jobs):
    env = fileio.load_environment(cfg.environment_path)
    tensor, _, _ = synthesize(
        env,
        cfg.ue,
        cfg.array,
        cfg.freqs,
        max_order=cfg.max_order,
        diffuse=cfg.diffuse,
        noise_var=cfg.noise_var,
        seed=seed,
        tx_pattern=cfg.tx_pattern,
        rx_pattern=cfg.rx_pattern,
        scenario=os.path.basename(cfg.environment_path),
    )
    fileio.save_tensor(tensor, _artifact(workdir, "synth"))


def _stage_visibility(cfg: ScenarioConfig, workdir, seed, jobs):
    env = fileio.load_environment(cfg.environment_path)
    sources = compute_image_sources(env, cfg.ue, cfg.max_order)
    mask = visibility_mask(env, cfg.ue, cfg.array.element_positions, sources)
    subs = partition_subarrays(cfg.array, cfg.subarray_size)
    grids = {
        cid: assoc.subarray_visibility(m, cfg.array, subs) for cid, m in mask.items()
    }
    fileio.save_visibility_json(mask, grids, _artifact(workdir, "visibility"))


def _stage_beamform(cfg: ScenarioConfig, workdir, seed, jobs):
    tensor = fileio.load_tensor(_require(workdir, "synth", "beamform"))
    spec = beamform.spherical_spectrum(tensor, cfg.array, cfg.beam_grid)
    margs = beamform.marginals(spec)
    fileio.save_marginals_csv(
        spec, margs, _artifact(workdir, "beamform"), db_scale=cfg.beam_db_scale
    )


def _stage_estimate(cfg: ScenarioConfig, workdir, seed, jobs):
    tensor = fileio.load_tensor(_require(workdir, "synth", "estimate"))
    subs = partition_subarrays(cfg.array, cfg.subarray_size)
    band = cfg.sbl_band_slice()
    results = sbl.estimate_subarrays(
        tensor.H[:, band], cfg.array, subs, tensor.freqs[band], cfg.sbl, jobs=jobs
    )
    fileio.save_results_jsonl(results, _artifact(workdir, "estimate"))


def _associations(cfg: ScenarioConfig, workdir, needed_by):
    results = fileio.load_results_jsonl(_require(workdir, "estimate", needed_by))
    env = fileio.load_environment(cfg.environment_path)
    sources = compute_image_sources(env, cfg.ue, cfg.max_order)
    subs = partition_subarrays(cfg.array, cfg.subarray_size)
    by_index = {s.index: s for s in subs}
    associations = []
    for res in results:
        preds = assoc.predict(env, cfg.ue, by_index[res.subarray_index], sources, cfg.array)
        associations.append(assoc.associate_subarray(res, preds, cfg.gates))
    return results, associations, subs


def _stage_associate(cfg: ScenarioConfig, workdir, seed, jobs):
    results, associations, subs = _associations(cfg, workdir, "associate")
    maps = assoc.visibility_and_amplitude_maps(
        results, associations, cfg.array, subs, compensate_pathloss=True
    )
    fileio.save_maps_csv(maps, _artifact(workdir, "associate"))


def _stage_report(cfg: ScenarioConfig, workdir, seed, jobs):
    results, associations, _ = _associations(cfg, workdir, "report")
    report = assoc.energy_report(results, associations, top_k=6)
    fileio.save_energy_report_csv(report, _artifact(workdir, "report"))
    print(fileio.format_energy_report(report))


_RUNNERS = {
    "synth": _stage_synth,
    "visibility": _stage_visibility,
    "beamform": _stage_beamform,
    "estimate": _stage_estimate,
    "associate": _stage_associate,
    "report": _stage_report,
}


def run_pipeline(cfg: ScenarioConfig, stages=STAGES, workdir=".", seed=None, jobs=1) -> dict:
    """Run the requested stages in canonical order and write the manifest.

    Returns the manifest mapping.  Raises DependencyError when a stage's
    input artifact is missing (its producing stage neither requested now nor
    run earlier into the same workdir).
    """
    seed = cfg.seed if seed is None else int(seed)
    os.makedirs(workdir, exist_ok=True)
    ordered = [s for s in STAGES if s in set(stages)]
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stages: {sorted(unknown)}")
    for stage in ordered:
        for dep in _STAGE_DEPS.get(stage, ()):
            if dep not in ordered:
                _require(workdir, dep, stage)
        _RUNNERS[stage](cfg, workdir, seed, jobs)
    manifest = {
        "seed": seed,
        "stages": ordered,
        "artifacts": [
            {"name": ARTIFACTS[s], "sha256": fileio.sha256_of(_artifact(workdir, s))}
            for s in ordered
        ],
    }
    with open(os.path.join(workdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
