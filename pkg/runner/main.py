"""qcstar command-line entry point."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from common.constants import EXIT_ASSERTION, EXIT_IO, EXIT_OK, EXIT_SCHEMA, Command, OperatorSuite
from common.errors import SchemaError
from common.observability.logging import setup_logging
from common.utils.config import get_settings
from runner.dispatcher import RunConfig, dispatch
from runner.report_writer import render_report

logger = logging.getLogger(__name__)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    settings = get_settings()
    parser.add_argument("--model", type=Path, required=True, help="Model file (JSON)")
    parser.add_argument(
        "--out",
        type=Path,
        default=Path(settings.report_path),
        help=f"Report path (default: {settings.report_path})",
    )
    parser.add_argument("--format", choices=["json", "csv"], default=settings.report_format)
    parser.add_argument("--seed", type=int, default=0, help="Seed for random sampling")
    parser.add_argument("--tol", type=float, default=settings.seminorm_tol, help="Seminorm tolerance")
    parser.add_argument("--samples", type=int, default=settings.samples, help="Random samples per suite")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcstar",
        description="Verify and compute in locally convex quasi C*-algebra models.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    axioms = commands.add_parser(Command.AXIOMS, help="Axiom, Gelfand and calculus law suites")
    _common_flags(axioms)

    spectrum = commands.add_parser(Command.SPECTRUM, help="Spectrum of a quasi-positive element")
    _common_flags(spectrum)
    spectrum.add_argument("--element", required=True)

    calculus = commands.add_parser(Command.CALCULUS, help="Apply a catalog function")
    _common_flags(calculus)
    calculus.add_argument("function", metavar="FUNCTION", help="pow:q, respow:m, exp:c, poly:[...] or table:<file>")
    calculus.add_argument("--element", required=True)
    calculus.add_argument("-n", type=int, default=1, help="Class order")

    root = commands.add_parser(Command.ROOT, help="Quasi n-th root")
    _common_flags(root)
    root.add_argument("--element", required=True)
    root.add_argument("-n", type=int, default=2, help="Root order")

    product = commands.add_parser(Command.PRODUCT, help="Partial product of two elements")
    _common_flags(product)
    product.add_argument("--left", required=True)
    product.add_argument("--right", required=True)

    gelfand = commands.add_parser(Command.GELFAND, help="Extended transform of ax + y")
    _common_flags(gelfand)
    gelfand.add_argument("--a", required=True)
    gelfand.add_argument("--x", required=True)
    gelfand.add_argument("--y", required=True)

    gns = commands.add_parser(Command.GNS, help="GNS representations of positive forms")
    _common_flags(gns)
    gns.add_argument("--forms", type=Path, required=True)

    opmodel = commands.add_parser(Command.OPMODEL, help="Operator model suites")
    _common_flags(opmodel)
    opmodel.add_argument(
        "suite",
        metavar="SUITE",
        nargs="?",
        default=OperatorSuite.ALL,
        choices=[
            OperatorSuite.COMMUTANT,
            OperatorSuite.LATTICE,
            OperatorSuite.PROP43,
            OperatorSuite.PHYSICAL,
            OperatorSuite.BRIDGE,
            OperatorSuite.ALL,
        ],
    )
    return parser


def to_config(args: argparse.Namespace) -> RunConfig:
    settings = get_settings()
    values = {key: value for key, value in vars(args).items() if value is not None}
    return RunConfig(
        cauchy_tol=settings.cauchy_tol,
        infinity_measure_cells=settings.infinity_measure_cells,
        schedule_base=settings.schedule_base,
        schedule_alt_base=settings.schedule_alt_base,
        cauchy_decay=settings.cauchy_decay,
        cauchy_window=settings.cauchy_window,
        cauchy_max_steps=settings.cauchy_max_steps,
        class_sup_threshold=settings.class_sup_threshold,
        continuity_samples=settings.continuity_samples,
        continuity_cap=settings.continuity_cap,
        physical_decay_order=settings.physical_decay_order,
        max_concurrency=settings.max_concurrency,
        **values,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run one command.

    Exit codes: 0 all checks pass, 1 a check failed, 2 schema or parse error
    (no report written), 3 I/O error.
    """
    settings = get_settings()
    setup_logging(settings.log, json_output=settings.log_json)
    args = build_parser().parse_args(argv)

    try:
        config = to_config(args)
        report = dispatch(config)
    except ValidationError as e:
        error = e.errors()[0]
        print(f"[error] invalid option {'.'.join(map(str, error['loc']))}: {error['msg']}", file=sys.stderr)
        return EXIT_SCHEMA
    except SchemaError as e:
        print(f"[error] {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as e:
        print(f"[error] {e}", file=sys.stderr)
        return EXIT_IO

    try:
        render_report(report, config.out, config.format)
    except OSError as e:
        print(f"[error] cannot write report: {e}", file=sys.stderr)
        return EXIT_IO

    for failure in report.failures:
        print(f"[fail] {failure.suite}.{failure.check}: {failure.detail or failure.residual}", file=sys.stderr)
    return EXIT_OK if report.is_passing else EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
