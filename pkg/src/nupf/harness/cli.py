"""Command-line entry point.

    nupf run <config-path> [--seed S] [--runs R] [--out DIR] [--threads K]
    nupf list-experiments
    nupf print-default-config <experiment-id>

Exit code 0 on success; 1 with a message on stderr for any error. The
``NUPF_OUT_DIR`` environment variable sets the default output directory.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError
from .config import config_dump, config_load, default_config
from .experiments import list_experiments, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nupf",
                                     description="Run nudged-particle-filter experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("config", help="path to a flat key=value config file")
    run_p.add_argument("--seed", type=int, default=None, help="override the master seed")
    run_p.add_argument("--runs", type=int, default=None, help="override the run count")
    run_p.add_argument("--out", default=None, help="override the output directory")
    run_p.add_argument("--threads", type=int, default=None,
                       help="override the worker count")

    sub.add_parser("list-experiments", help="list known experiment ids")

    print_p = sub.add_parser("print-default-config",
                             help="emit the documented default config")
    print_p.add_argument("experiment", help="experiment id")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list-experiments":
            for name in list_experiments():
                print(name)
            return 0
        if args.command == "print-default-config":
            print(config_dump(default_config(args.experiment), documented=True), end="")
            return 0
        cfg = config_load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.runs is not None:
            cfg.runs = args.runs
        if args.out is not None:
            cfg.out_dir = args.out
        if args.threads is not None:
            cfg.threads = args.threads
        records, summary = run_experiment(cfg)
        out_dir = cfg.resolved_out_dir()
        print(f"{cfg.experiment}: {len(records)} runs -> "
              f"{out_dir / (cfg.experiment + '_runs.csv')}")
        for row in summary:
            print(f"  {row['field']}: mean={row['mean']:.6g} std={row['std']:.6g}")
        return 0
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
