"""Command-line entry point.

    dltsim simulate SCENARIO [--runs N] [--seed S] [--duration T]
                             [--out DIR] [--config FILE] [--set key=value ...]
                             [--workers W]
    dltsim scenarios

Exit code 0 on success, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, SimConfig, apply_overrides, load_config
from .scenarios import SCENARIO_NAMES, build_scenario, run_scenario


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dltsim",
                                description="DAG-ledger access control simulator")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and export CSVs")
    sim.add_argument("scenario", help="scenario name (see `dltsim scenarios`)")
    sim.add_argument("--runs", type=int, default=None,
                     help="Monte Carlo runs per cell (default from config)")
    sim.add_argument("--seed", type=int, default=None, help="master RNG seed")
    sim.add_argument("--duration", type=float, default=None,
                     help="simulated seconds per run")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--config", default=None, help="INI configuration file")
    sim.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a config key")
    sim.add_argument("--workers", type=int, default=0,
                     help="parallel workers (0 = one per CPU, capped by runs)")

    sub.add_parser("scenarios", help="list scenario presets")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "scenarios":
        base = SimConfig()
        for name in SCENARIO_NAMES:
            sc = build_scenario(name, base)
            cells = "" if len(sc.cells) == 1 else \
                f" [{', '.join(c.label for c in sc.cells)}]"
            print(f"{name:16s} {sc.description}{cells}")
        return 0

    try:
        cfg = SimConfig()
        if args.config:
            cfg = load_config(args.config, cfg)
        if args.overrides:
            cfg = apply_overrides(cfg, args.overrides)
        if args.seed is not None:
            cfg = apply_overrides(cfg, [f"seed={args.seed}"])
        if args.duration is not None:
            cfg = apply_overrides(cfg, [f"duration={args.duration}"])
        runs = args.runs if args.runs is not None else cfg.monte_carlo_runs
        if runs < 1:
            raise ConfigError("need at least one run")
        workers = args.workers or min(os.cpu_count() or 1, runs)
        run_scenario(args.scenario, cfg, runs, workers=workers,
                     out_dir=args.out)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {os.path.join(args.out, args.scenario)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
