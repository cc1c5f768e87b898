"""Command-line entry point: ``meerr theory|simulate|compare|sweep``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from meerr import __version__
from meerr.config import FORMATS, RunConfig, load_document, parse_grid, run_issues, with_axis_value
from meerr.errors import ConfigError, MeerrError
from meerr.report import (
    compare_table,
    load_stats,
    simulate_table,
    sweep_row,
    sweep_table,
    theory_table,
    write_report,
)
from meerr.simulation import SimulationScenario, compare_theory, run_monte_carlo
from meerr.theory import theory_for

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_COMPARISON_FAILED = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's exit 2."""

    def error(self, message: str):
        raise ConfigError([("argv", message)])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="meerr", description="Mean estimators with auxiliary variables under measurement error")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "theory": "first-order bias and MSE of every estimator plus the bounds",
        "simulate": "Monte Carlo bias and MSE",
        "compare": "z-scores of Monte Carlo against first-order theory",
        "sweep": "theory (and optionally Monte Carlo) over a grid of n or error CVs",
    }
    for name, text in helps.items():
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--config", required=True, type=Path, help="scenario document (JSON)")
        sub.add_argument("--out", help="report path, '-' for stdout")
        sub.add_argument("--format", dest="fmt", choices=FORMATS)
        sub.add_argument("--workers", type=int, help="Monte Carlo worker processes (env MEERR_WORKERS)")
        sub.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        if name == "compare":
            sub.add_argument("--z", type=float, help="z-score threshold (default 4.0)")
            sub.add_argument("--stats", dest="stats_path", type=Path, help="saved simulate report to compare")
        if name == "sweep":
            sub.add_argument("--axis", help="n, c0_err or c_err:<i> (1-based)")
            sub.add_argument("--grid", type=parse_grid, help="comma-separated increasing values")
            sub.add_argument("--simulate", action="store_const", const=True, help="add Monte Carlo columns")
    return parser


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else os.environ.get("MEERR_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=level,
        format="[%(asctime)s] %(levelname)s %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )


def run(config: RunConfig, scenario: SimulationScenario) -> int:
    """Execute one command and write its report; returns the exit code."""
    spec, estimators = scenario.spec, scenario.estimators
    log.info(f"{config.command}: p={spec.p}, {len(estimators)} estimators, n={scenario.n}")

    if config.command == "theory":
        table = theory_table(spec, estimators, scenario.n)
    elif config.command == "simulate":
        table = simulate_table(run_monte_carlo(scenario, workers=config.workers))
    elif config.command == "compare":
        if config.stats_path is not None:
            stats = load_stats(config.stats_path)
            log.info(f"comparing against saved statistics in {config.stats_path}")
        else:
            stats = run_monte_carlo(scenario, workers=config.workers)
        theory = [theory_for(c, spec, scenario.n) for c in estimators]
        comparison = compare_theory(stats, theory, z_threshold=config.z)
        write_report(compare_table(comparison), config.out, config.fmt, config.command)
        if not comparison.passed:
            failed = [row.label for row in comparison.rows if not row.passed]
            log.warning(f"comparison failed for {', '.join(failed)}")
            return EXIT_COMPARISON_FAILED
        return EXIT_OK
    elif config.command == "sweep":
        rows = []
        for value in config.grid:
            point = with_axis_value(scenario, config.axis, value)
            stats = run_monte_carlo(point, workers=config.workers) if config.simulate else None
            rows.append(sweep_row(config.axis, value, point.spec, point.estimators, point.n, stats))
        table = sweep_table(rows)
    else:
        raise ConfigError([("run.command", f"unknown command {config.command!r}")])

    write_report(table, config.out, config.fmt, config.command)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for the ``meerr`` console script."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"meerr: {exc}", file=sys.stderr)
        return EXIT_ERROR
    configure_logging(args.verbose)
    try:
        document_run, scenario = load_document(args.config)
        config = document_run.override(
            command=args.command,
            out=args.out,
            fmt=args.fmt,
            workers=args.workers,
            z=getattr(args, "z", None),
            stats_path=getattr(args, "stats_path", None),
            axis=getattr(args, "axis", None),
            grid=getattr(args, "grid", None),
            simulate=getattr(args, "simulate", None),
        )
        issues = run_issues(config, scenario.spec.p)
        if issues:
            raise ConfigError(issues)
        return run(config, scenario)
    except (MeerrError, OSError) as exc:
        log.error(str(exc))
        return EXIT_ERROR
