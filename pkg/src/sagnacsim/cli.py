"""Command-line front end.

Subcommands: simulate, fringes, chsh, ruler, dispersion-fit, performance.
Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import ConfigError, DataError, NumericalError
from . import pipelines

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sagnacsim",
        description=(
            "Simulate a Sagnac-loop entangled photon-pair source and run the "
            "coincidence, Bell-test and dispersion analyses."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument(
        "--format", choices=("csv", "json"), default="json", help="report format where applicable"
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write coincidence histograms")
    sub.add_parser("fringes", parents=[common], help="phase scans and visibility fits")
    sub.add_parser("chsh", parents=[common], help="raw and noise-subtracted S-parameters")
    sub.add_parser("ruler", parents=[common], help="visibility-vs-delay ruler CSV")
    fit = sub.add_parser("dispersion-fit", parents=[common], help="fit the fibre scaling factor")
    fit.add_argument("--scan", default=None, help="measured length-scan CSV (default: synthesize)")
    fit.add_argument("--ruler", default=None, help="measured ruler CSV (default: analytic)")
    sub.add_parser("performance", parents=[common], help="source performance report")
    return parser


def run_command(args) -> int:
    config = load_config(args.config)
    seed = config.seed if args.seed is None else args.seed
    out_dir = Path(args.out)

    with pipelines.output_lock(out_dir):
        if args.command == "simulate":
            outputs = pipelines.write_simulate_outputs(out_dir, config, args.config, seed)
        elif args.command == "fringes":
            outputs = pipelines.write_fringe_outputs(out_dir, config, args.config, seed)
        elif args.command == "chsh":
            outputs = pipelines.write_chsh_outputs(out_dir, config, args.config, seed)
        elif args.command == "ruler":
            outputs = pipelines.write_ruler_outputs(out_dir, config, args.config, seed)
        elif args.command == "dispersion-fit":
            outputs = pipelines.write_dispersion_outputs(
                out_dir, config, args.config, seed, scan_path=args.scan, ruler_path=args.ruler
            )
        elif args.command == "performance":
            outputs = pipelines.write_performance_outputs(
                out_dir, config, args.config, seed, output_format=args.format
            )
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")

    for name in outputs:
        print(out_dir / name)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run_command(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
