"""scarlab <experiment> --config <path> [--emit-svg]

Exit codes: 0 success, 1 config error, 2 solver non-convergence.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ConfigError, parse_config
from .runner import EXIT_CONFIG, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scarlab",
        description="Mean-field, kinetic and Floquet analyses of a driven "
                    "N-flavor bosonic lattice, one subcommand per experiment.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--emit-svg", action="store_true",
                       help="also render one SVG line plot per CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.experiment)
    except ConfigError as exc:
        print(f"scarlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.emit_svg:
        cfg.emit_svg = True
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
