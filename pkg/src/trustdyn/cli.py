"""Command-line entry point: ``trustdyn <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, parse_config, parse_config_text
from .pipeline import STAGES, StageError, run_subcommand

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trustdyn", description="Simulate, fit, cluster, and classify trust dynamics.")
    p.add_argument("subcommand", choices=STAGES + ("all",))
    p.add_argument("--config", type=Path, help="key=value configuration file")
    p.add_argument("--seed", type=int, help="root seed (overrides the config file)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--mode", choices=("per_level", "pooled"), help="clustering granularity")
    p.add_argument("--jobs", type=int, help="worker processes for per-agent work")
    p.add_argument("--agent", action="append", help="agent id for `report` (repeatable; default all)")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    overrides = {"seed": args.seed, "out": args.out, "clustering_mode": args.mode, "jobs": args.jobs}
    try:
        if args.config is not None:
            cfg = parse_config(args.config, overrides)
        else:
            cfg = parse_config_text("", overrides)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        written = run_subcommand(args.subcommand, cfg, agents=args.agent)
    except StageError as e:
        print(f"error in stage {e.stage}: {e.cause}", file=sys.stderr)
        return e.exit_code
    if not args.quiet:
        for name in written:
            print(Path(cfg.out) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
