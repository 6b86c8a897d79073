"""Command-line entry point: ``run``, ``witness`` and ``capacities`` verbs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .correlations import ALL_MEASURES, MeasureKind, correlation_capacity, dimension_witness
from .errors import MediatorError
from .scenario import load_config, run_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def witness_command(kind: MeasureKind, observed: float) -> str:
    """Line reporting the smallest mediator dimension consistent with ``observed``."""
    return f"d_C >= {dimension_witness(kind, observed)}"


def capacities_lines(d_c: int) -> list[str]:
    return [f"{k.short_name}={correlation_capacity(k, d_c)!r}" for k in ALL_MEASURES]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mediator",
        description="Correlation dynamics of two probes coupled through a mediator, "
        "checked against the bounds for decomposable evolution.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate a scenario file and write its CSV trajectory")
    run.add_argument("config", help="path to a key=value scenario file")

    wit = sub.add_parser("witness", help="minimal mediator dimension for an observed correlation")
    wit.add_argument("measure", help="measure name, e.g. negativity or mutual_information")
    wit.add_argument("value", help="observed value (initial-correlation offset already removed)")

    cap = sub.add_parser("capacities", help="print the four correlation capacities of a mediator")
    cap.add_argument("d_c", help="mediator dimension (>= 2)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            config_path = Path(args.config)
            config = load_config(config_path)
            run_scenario(config, base_dir=config_path.parent)
        elif args.verb == "witness":
            try:
                value = float(args.value)
            except ValueError:
                parser.error(f"observed value {args.value!r} is not a number")
            print(witness_command(MeasureKind.parse(args.measure), value))
        else:
            try:
                d_c = int(args.d_c)
            except ValueError:
                parser.error(f"d_C must be an integer, got {args.d_c!r}")
            for line in capacities_lines(d_c):
                print(line)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MediatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc, ArithmeticError) else EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
