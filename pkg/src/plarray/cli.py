"""Command-line interface for the synthesis/analysis pipeline.

Subcommands mirror the pipeline stages plus `pipeline` to chain them.
Exit codes: 0 success, 2 configuration error, 3 invariant violation,
4 missing dependency artifact.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_scenario
from .errors import ConfigError, DependencyError, InvalidGeometryError
from .pipeline import STAGES, run_pipeline


def _add_common(p):
    p.add_argument("--scenario", required=True, help="scenario config JSON")
    p.add_argument("--workdir", default=".", help="artifact directory")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="KEY=VALUE",
        help="override a scenario field by dotted path, e.g. synth.noise_var=1e-8",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plarray",
        description="Synthesize and analyze multipath visibility over large planar arrays",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize the channel tensor")
    _add_common(p)
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")

    p = sub.add_parser("visibility", help="compute geometric visibility masks")
    _add_common(p)

    p = sub.add_parser("beamform", help="full-array spherical-wave spectra")
    _add_common(p)

    p = sub.add_parser("estimate", help="per-subarray multipath estimation")
    _add_common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel subarray workers")

    p = sub.add_parser("associate", help="match estimates to predicted components")
    _add_common(p)

    p = sub.add_parser("report", help="component energy table")
    _add_common(p)

    p = sub.add_parser("pipeline", help="run several stages in order")
    _add_common(p)
    p.add_argument(
        "--stages",
        default=",".join(STAGES),
        help=f"comma-separated subset of {','.join(STAGES)}",
    )
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel subarray workers")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_scenario(args.scenario, args.overrides)
        if args.command == "pipeline":
            stages = [s.strip() for s in args.stages.split(",") if s.strip()]
            unknown = set(stages) - set(STAGES)
            if unknown:
                raise ConfigError(f"unknown stages: {sorted(unknown)}")
            run_pipeline(
                cfg, stages, workdir=args.workdir, seed=args.seed, jobs=args.jobs
            )
        else:
            seed = getattr(args, "seed", None)
            jobs = getattr(args, "jobs", 1)
            run_pipeline(
                cfg, [args.command], workdir=args.workdir, seed=seed, jobs=jobs
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvalidGeometryError, ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
