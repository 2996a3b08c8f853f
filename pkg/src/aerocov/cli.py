"""Command-line entry point: ``aerocov run``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PRESETS, ConfigError, load_config, select_engines
from .sweep import render, run_sweep

log = logging.getLogger("aerocov")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerocov",
        description="UAV coverage probability sweeps: analytic and Monte Carlo engines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a parameter sweep and write a result table")
    run.add_argument("--config", type=Path, help="YAML sweep config (layered on --preset if given)")
    run.add_argument("--preset", choices=PRESETS, help="built-in figure preset")
    run.add_argument("--engine", choices=("analytic", "mc", "both"),
                     help="restrict or extend the engines of the configured runs")
    run.add_argument("--seed", type=int, help="Monte Carlo seed")
    run.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
    run.add_argument("--workers", type=int, help="grid points evaluated in parallel")
    run.add_argument("--out", type=Path, help="output file (default: stdout)")
    run.add_argument("--format", choices=("csv", "json"), help="output format")
    run.add_argument("--timing", action="store_true",
                     help="fill the wall_ms column (makes the output run-dependent)")
    run.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _overrides(args) -> dict:
    over: dict = {}
    if args.seed is not None:
        over.setdefault("montecarlo", {})["seed"] = args.seed
    if args.trials is not None:
        over.setdefault("montecarlo", {})["trials"] = args.trials
    if args.workers is not None:
        over.setdefault("sweep", {})["workers"] = args.workers
    if args.format is not None:
        over.setdefault("output", {})["format"] = args.format
    if args.out is not None:
        over.setdefault("output", {})["path"] = str(args.out)
    if args.timing:
        over.setdefault("output", {})["timing"] = True
    return over


def cmd_run(args) -> int:
    if args.config is None and args.preset is None:
        print("aerocov run: need --config and/or --preset", file=sys.stderr)
        return 2
    try:
        spec = load_config(args.config, preset=args.preset, overrides=_overrides(args))
        if args.engine is not None:
            spec.runs = select_engines(spec.runs, args.engine)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    rows = run_sweep(spec)
    text = render(rows, spec)
    if spec.output_path:
        out = Path(spec.output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        sys.stdout.write(text)

    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        print(f"failed: {r.method} {r.deployment} lam={r.density_per_km2:g} "
              f"gamma={r.uav_height_m:g}: {r.status}", file=sys.stderr)
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "run":
        return cmd_run(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
