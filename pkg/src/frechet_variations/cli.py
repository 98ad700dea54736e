from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from . import __version__
from .config import RunConfig, field_curve, field_function, load_configuration
from .dubois_reymond import (
    dbr_report,
    random_test_variations,
    separating_variation,
    weak_form_residual,
)
from .el_solver import (
    convergence_study,
    el_residual,
    solve_bvp,
    solve_ivp,
    verify_critical,
)
from .errors import ConfigurationError, VariationalError
from .function_space import GridFunction
from .logging_utils import get_logger, log_summary, resolve_level, setup_logging
from .utils_io import (
    read_dual_curve,
    write_curve,
    write_grid_function,
    write_summary,
    write_table,
)
from .weak_integral import DualCurve, SampledCurve, integrate_dual_curve, verify_weak_property

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


@dataclass
class CommandOutcome:
    """What a subcommand produced: a table, a summary and a verdict."""

    table: pd.DataFrame
    summary: Dict[str, object]
    ok: bool = True
    curves: Dict[str, Union[SampledCurve, GridFunction]] = field(default_factory=dict)


def _header(command: str, config: RunConfig) -> Dict[str, object]:
    return {
        "command": command,
        "lagrangian": config.make_lagrangian().describe(),
        "N": config.grid.N,
        "m": config.grid.m,
        "M": config.time.M,
        "a": config.time.a,
        "b": config.time.b,
        "seed": config.run.seed,
    }


def run_residual(config: RunConfig) -> CommandOutcome:
    lagrangian = config.make_lagrangian()
    curve = config.make_exact().curve(config.make_time(), config.make_grid())
    residual = el_residual(lagrangian, curve, config.make_diff())
    summary = _header("residual", config)
    summary.update(residual_max=residual.max_norm, residual_l2=residual.l2_norm)
    ok = config.curve.tol is None or residual.max_norm <= config.curve.tol
    return CommandOutcome(residual.to_frame(), summary, ok)


def run_solve_ivp(config: RunConfig) -> CommandOutcome:
    grid = config.make_grid()
    u0 = field_function(config.initial.u, grid, field="initial.u")
    v0 = field_function(config.initial.v, grid, field="initial.v")
    report = solve_ivp(config.make_lagrangian(), u0, v0, config.make_time(), config.make_diff())
    summary = _header("solve-ivp", config)
    summary.update(report.summary())
    return CommandOutcome(report.to_frame(), summary, True, {"solution": report.solution})


def run_solve_bvp(config: RunConfig) -> CommandOutcome:
    grid = config.make_grid()
    u_a = field_function(config.boundary.u_a, grid, field="boundary.u_a")
    u_b = field_function(config.boundary.u_b, grid, field="boundary.u_b")
    report = solve_bvp(
        config.make_lagrangian(),
        u_a,
        u_b,
        config.make_time(),
        config.make_solver_options(),
        config.make_diff(),
    )
    summary = _header("solve-bvp", config)
    summary.update(report.summary())
    return CommandOutcome(report.to_frame(), summary, report.converged, {"solution": report.solution})


def run_verify_critical(config: RunConfig) -> CommandOutcome:
    lagrangian = config.make_lagrangian()
    curves: Dict[str, Union[SampledCurve, GridFunction]] = {}
    if config.verify.source == "bvp":
        outcome = run_solve_bvp(config)
        curve = outcome.curves["solution"]
        curves["solution"] = curve
        if not outcome.ok:
            logger.warning("boundary value solve did not converge; verifying the last iterate")
    else:
        curve = config.make_exact().curve(config.make_time(), config.make_grid())
    report = verify_critical(
        lagrangian,
        curve,  # type: ignore[arg-type]
        count=config.verify.count,
        tolerance=config.verify.tol,
        mode=config.verify.mode,
        cfg=config.make_diff(),
    )
    summary = _header("verify-critical", config)
    summary.update(
        mode=report.mode,
        variations=len(report.labels),
        max_normalized=report.max_normalized,
        tol=report.tolerance,
        critical=report.passed,
    )
    expect = config.verify.expect
    ok = expect == "any" or report.passed == (expect == "pass")
    return CommandOutcome(report.to_frame(), summary, ok, curves)


def _dual_input(config: RunConfig, expression: Optional[str], path: Optional[str], name: str) -> DualCurve:
    if path:
        curve = read_dual_curve(config.resolve(path))
        if curve.grid != config.make_grid() or curve.time != config.make_time():
            raise ConfigurationError(name + "_file", "curve file does not match [grid] and [time]")
        return curve
    if expression is None:
        raise ConfigurationError(name, "needs an expression or a file")
    return field_curve(expression, config.make_time(), config.make_grid(), field=name)


def run_weak_integral_check(config: RunConfig) -> CommandOutcome:
    section = config.weak
    curve = _dual_input(config, section.density, section.curve_file, "weak.density")
    quadrature = config.make_quadrature()
    integral = integrate_dual_curve(curve, quadrature)
    report = verify_weak_property(curve, integral, section.trials, config.rng(), quadrature)
    summary = _header("weak-integral-check", config)
    summary.update(
        rule=quadrature.rule,
        trials=report.trials,
        max_relative_discrepancy=report.max_relative_discrepancy,
        tol=section.tol,
        passed=report.passed(section.tol),
    )
    table = pd.DataFrame(
        {"trial": np.arange(report.trials), "relative_discrepancy": report.discrepancies}
    )
    outcome = CommandOutcome(table, summary, report.passed(section.tol))
    outcome.summary["integral_p0"] = float(np.max(np.abs(integral.density)))
    outcome.curves["integral"] = integral.as_grid_function()
    return outcome


def run_dbr_check(config: RunConfig) -> CommandOutcome:
    section = config.dbr
    f = _dual_input(config, section.f, section.f_file, "dbr.f")
    g = _dual_input(config, section.g, section.g_file, "dbr.g")
    quadrature = config.make_quadrature()
    report = dbr_report(f, g, quadrature)
    variations = random_test_variations(f.time, f.grid, section.variations, config.rng())
    residuals = [abs(weak_form_residual(f, g, mu)) for mu in variations]
    summary = _header("dbr-check", config)
    summary.update(
        defect=report.defect,
        max_weak_residual=max(residuals, default=0.0),
        constant=report.defect <= section.tol,
    )
    if report.defect > section.tol:
        separating = separating_variation(f, g, quadrature=quadrature)
        summary["separating_residual"] = weak_form_residual(f, g, separating)
    expect = section.expect
    ok = expect == "any" or (report.defect <= section.tol) == (expect == "constant")
    return CommandOutcome(report.to_frame(), summary, ok, {"h": report.h})


def run_converge(config: RunConfig) -> CommandOutcome:
    section = config.ladder
    result = convergence_study(
        config.make_lagrangian(),
        config.make_exact(),
        section.N,
        section.M,
        interval=(config.time.a, config.time.b),
        mode=section.mode,
        m=config.grid.m,
        cfg=config.make_diff(),
    )
    summary = _header("converge", config)
    summary.update(mode=result.mode, status=result.status)
    summary["order"] = result.order if result.order is not None else "floor"
    ok = True
    if section.min_slope is not None and result.order is not None:
        ok = result.order >= section.min_slope
    summary["passed"] = ok
    return CommandOutcome(result.table, summary, ok)


COMMANDS: Dict[str, Callable[[RunConfig], CommandOutcome]] = {
    "residual": run_residual,
    "solve-ivp": run_solve_ivp,
    "solve-bvp": run_solve_bvp,
    "verify-critical": run_verify_critical,
    "weak-integral-check": run_weak_integral_check,
    "dbr-check": run_dbr_check,
    "converge": run_converge,
}


COMMAND_HELP = {
    "residual": "Euler-Lagrange residual of an analytic curve",
    "solve-ivp": "Leapfrog initial value problem",
    "solve-bvp": "Fixed-endpoint boundary value problem",
    "verify-critical": "First variations over a family of test variations",
    "weak-integral-check": "Weak integral of a dual curve against random directions",
    "dbr-check": "Constancy test for g minus the running integral of f",
    "converge": "Observed order along a refinement ladder",
}


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        "-c",
        help="Path to configuration file",
        default=None,
    )
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Override [run] seed",
    )
    common.add_argument(
        "--out",
        default=None,
        help="Output directory (default: [run] output)",
    )
    common.add_argument(
        "--quiet",
        action="store_true",
        help="Only log warnings and errors",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose logging (equivalent to --log-level DEBUG)",
    )
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="INFO",
        help="Set the logging level (default: INFO)",
    )
    common.add_argument(
        "--log-file",
        default=None,
        help="Optional path to a log file",
    )
    return common


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="frechet_variations",
        description="Euler-Lagrange calculus on loop spaces",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"frechet_variations {__version__}",
    )
    common = _common_arguments()
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name in COMMANDS:
        commands.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    return parser.parse_args(argv)


def _write_outputs(command: str, outcome: CommandOutcome, out_dir: Path) -> None:
    write_table(outcome.table, out_dir / f"{command}.csv")
    for name, curve in outcome.curves.items():
        path = out_dir / f"{command}_{name}.txt"
        if isinstance(curve, SampledCurve):
            write_curve(curve, path)
        else:
            write_grid_function(curve, path)
        logger.debug("wrote %s", path)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if isinstance(exc.code, int) else EXIT_USAGE

    level = resolve_level(args.log_level, verbose=args.verbose, quiet=args.quiet)
    log_file = Path(args.log_file) if args.log_file else None
    setup_logging(level=level, log_file=log_file)
    logger.debug("Starting %s", args.command)

    try:
        config = load_configuration(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigurationError("run.seed", f"must be an unsigned 64-bit integer, got {args.seed}")
            config = config.with_seed(args.seed)
        out_dir = Path(args.out if args.out else config.run.output)
        outcome = COMMANDS[args.command](config)
        _write_outputs(args.command, outcome, out_dir)
    except ConfigurationError as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_USAGE
    except VariationalError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_FAILED

    write_summary(outcome.summary, sys.stdout)
    log_summary(logger, f"{args.command} summary", outcome.summary)
    if not outcome.ok:
        logger.warning("%s: pass criteria not met", args.command)
        return EXIT_FAILED
    return EXIT_OK
