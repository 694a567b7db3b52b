#!/usr/bin/env python3
from __future__ import annotations

"""Command-line interface for svepath experiments."""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from svepath.coefficients import get_fixture
from svepath.config import ExperimentConfig, load_config, merge_config, save_config
from svepath.exceptions import NumericalError, ParameterError
from svepath.experiments import (
    convergence_study,
    field_kernel,
    mc_holder_modulus,
    mc_moment,
    psi_limit_table,
    simulate_single,
    verify_field_study,
    verify_pi_study,
)
from svepath.selftest import format_results, run_selftest
from svepath.spde_field import (
    InitialCondition,
    field_tail_radius,
    solve_field,
    write_field_snapshot,
)
from svepath.types.core import BrownianDriver
from svepath.utils.csv_io import write_table

logger = logging.getLogger("svepath")

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_NUMERICAL = 3

# Flags shared by every experiment subcommand; names match ExperimentConfig fields.
CONFIG_FLAGS = (
    "kernel",
    "fixture",
    "T",
    "n",
    "paths",
    "p",
    "seed",
    "out",
    "x0",
    "workers",
    "strict_window",
    "m_list",
    "levels",
    "lags",
    "z_probes",
    "candidate",
    "bump_scale",
    "field_points",
)


def configure_logging(debug: bool) -> None:
    """Log to stderr: WARNING by default, DEBUG with --debug."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("svepath")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if debug else logging.WARNING)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values first, then every flag given on the command line."""
    file_values = load_config(args.config) if args.config else {}
    overrides = {name: getattr(args, name, None) for name in CONFIG_FLAGS}
    return merge_config(file_values, overrides)


def _report(paths: Sequence[Path]) -> None:
    for path in paths:
        print(f"wrote {path}")


def handle_simulate(config: ExperimentConfig) -> int:
    """Path 0 of the ensemble as ``t,value``."""
    path = simulate_single(config)
    out = write_table(config.out / "simulate.csv", ["t", "value"], [path.times, path.values])
    _report([out])
    return EXIT_OK


def handle_field(config: ExperimentConfig) -> int:
    """Snapshot of X_T(x) for path 0 on [-R, R], R the kernel's tail radius at T."""
    k = field_kernel(config)
    driver = BrownianDriver.from_seed(config.seed, config.grid)
    sol = solve_field(k, get_fixture(config.fixture), driver, InitialCondition.constant(config.x0))
    radius = field_tail_radius(k, config.T)
    xs = np.linspace(-radius, radius, config.field_points)
    _report(write_field_snapshot(sol, config.T, xs, config.out / "field.csv"))
    return EXIT_OK


def handle_verify_pi(config: ExperimentConfig) -> int:
    report = verify_pi_study(config)
    csv_path = report.to_csv(config.out / "report.csv")
    summary = config.out / "summary.txt"
    summary.write_text(report.summary(), encoding="utf-8", newline="\n")
    print(report.summary(), end="")
    _report([csv_path, summary])
    return EXIT_OK


def handle_verify_field(config: ExperimentConfig) -> int:
    """Pairing-level report for the θ-bump, plus the ψ^m table over ``m_list``."""
    report = verify_field_study(config)
    csv_path = report.to_csv(config.out / "field_report.csv")
    summary = config.out / "field_summary.txt"
    summary.write_text(report.summary(), encoding="utf-8", newline="\n")
    print(report.summary(), end="")
    psi_path = psi_limit_table(config).to_csv(config.out / "psi_limit.csv")
    _report([csv_path, summary, psi_path])
    return EXIT_OK


def handle_mc_moment(config: ExperimentConfig) -> int:
    table = mc_moment(config)
    _report([table.to_csv(config.out / "mc_moment.csv")])
    return EXIT_OK


def handle_mc_holder(config: ExperimentConfig) -> int:
    table = mc_holder_modulus(config)
    print(f"slope = {table.notes['slope']:.6g} (floor {table.notes['predicted_floor']:.6g})")
    _report([table.to_csv(config.out / "mc_holder.csv")])
    return EXIT_OK


def handle_convergence(config: ExperimentConfig) -> int:
    table = convergence_study(config)
    print(f"slope = {table.notes['slope']:.6g}")
    _report([table.to_csv(config.out / "convergence.csv")])
    return EXIT_OK


def handle_selftest(config: ExperimentConfig) -> int:
    results = run_selftest()
    print(format_results(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


HANDLERS: dict[str, Callable[[ExperimentConfig], int]] = {
    "simulate": handle_simulate,
    "field": handle_field,
    "verify-pi": handle_verify_pi,
    "verify-field": handle_verify_field,
    "mc-moment": handle_mc_moment,
    "mc-holder": handle_mc_holder,
    "convergence": handle_convergence,
    "selftest": handle_selftest,
}

# Subcommands that write nothing to --out
NO_OUTPUT = {"selftest"}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--kernel", help="powerlaw:alpha=0.25 | fbm-simple:H=0.25,C=1 | fbm-exact:H=0.25"
    )
    common.add_argument("--fixture", help="Coefficient fixture name")
    common.add_argument("--T", type=float, dest="T", help="Time horizon")
    common.add_argument("--n", type=int, help="Number of time steps")
    common.add_argument("--paths", type=int, help="Number of Monte Carlo paths")
    common.add_argument("--p", type=float, help="Moment order")
    common.add_argument("--seed", type=int, help="Root seed")
    common.add_argument("--out", type=Path, help="Output directory")
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--x0", type=float, help="Initial value")
    common.add_argument("--workers", type=int, help="Worker threads for path blocks")
    common.add_argument(
        "--no-strict-window",
        dest="strict_window",
        action="store_const",
        const=False,
        help="Estimate moments below the p-window (logs a warning)",
    )
    common.add_argument("--m-list", dest="m_list", help="Comma-separated mollifier indices")
    common.add_argument("--levels", help="Comma-separated refinement levels")
    common.add_argument("--lags", help="Comma-separated Hölder lags")
    common.add_argument("--z-probes", dest="z_probes", type=int, help="Number of z probes")
    common.add_argument("--candidate", help="Candidate v for verify-pi and verify-field")
    common.add_argument("--bump-scale", dest="bump_scale", type=float, help="Test-function radius")
    common.add_argument("--field-points", dest="field_points", type=int, help="Snapshot size")
    common.add_argument("--debug", action="store_true", help="Enable debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svepath",
        description="Simulate and check singular stochastic Volterra equations",
    )
    common = _common_parser()
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "simulate": "Solve one path and write t,value",
        "field": "Write the field snapshot X_T(x)",
        "verify-pi": "Path-independence residual report",
        "verify-field": "Path independence of the field pairing and the psi^m study",
        "mc-moment": "Monte Carlo moments E|X_t|^p",
        "mc-holder": "Monte Carlo Hölder modulus and slope",
        "convergence": "Coupled refinement gaps",
        "selftest": "Run the invariant suite",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _exit_code(e: SystemExit) -> int:
    if e.code is None:
        return EXIT_OK
    return e.code if isinstance(e.code, int) else EXIT_PARAMETER


def cli_main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; 0 on success, 2 on parameter errors, 3 on numerical errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return _exit_code(e)

    configure_logging(args.debug)
    try:
        config = build_config(args)
        if args.command not in NO_OUTPUT:
            config.out.mkdir(parents=True, exist_ok=True)
            save_config(config)
        logger.debug(f"running {args.command} with {config.model_dump()}")
        return HANDLERS[args.command](config)
    except ParameterError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_PARAMETER
    except NumericalError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    """Console-script entry point."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
