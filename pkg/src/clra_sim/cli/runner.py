#!/usr/bin/env python3
"""
Command runner for the CL-RA simulator

Subcommands:
    run       run the configured schemes (optionally on a scenario file)
    sweep     parameter sweep over one variable
    validate  oracle and invariant suites
    ga        discrete-angle experiments (GA and nearest projection)
"""

import argparse
from dataclasses import replace
from typing import List, Optional

from ..core.config import SCHEMES, SWEEP_VARIABLES, MODES, ConfigError, ConfigManager
from ..core.utils import log_message, save_results_to_json
from ..model.scenario_io import load_scenario
from ..services.experiment_service import ExperimentService
from ..validation.invariants import InvariantValidator, print_validation_report

DISCRETE_SCHEMES = ("ga_element", "ga_panel", "nearest_projection")


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="Configuration file path (JSON format)")
    parser.add_argument("--seed", type=int, help="Master seed (overrides CLRA_SEED)")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials per point")
    parser.add_argument("--out", help="Output CSV file for result rows")
    parser.add_argument("--summary", help="Output CSV file for the summary table")
    parser.add_argument(
        "--scheme",
        action="append",
        choices=SCHEMES,
        help="Scheme to run (repeatable)",
    )
    parser.add_argument("--threads", type=int, help="Worker processes")
    parser.add_argument("--mode", choices=MODES, help="Rotation mode")
    parser.add_argument(
        "--no-timing",
        action="store_true",
        help="Write wall_ms=0 for byte-stable output",
    )
    parser.add_argument("--verbose", action="store_true", help="Enable verbose output")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the run, sweep, validate and ga subcommands"""
    parser = argparse.ArgumentParser(
        prog="clra-sim",
        description="Cross-linked rotatable antenna array simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run --config configs/config.json --out results.csv
  %(prog)s sweep --sweep-var power --values 0 5 10 15 20 --scheme cl_element
  %(prog)s sweep --sweep-var Q --values 2x32 4x16 8x8 --trials 20 --threads 4
  %(prog)s validate --scale 0.1
  %(prog)s ga --levels 15 --trials 20
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run the configured schemes")
    _add_common_arguments(run)
    run.add_argument("--scenario", help="Scenario JSON file used for every trial")
    run.set_defaults(handler=command_run)

    sweep = subparsers.add_parser("sweep", help="Sweep one parameter")
    _add_common_arguments(sweep)
    sweep.add_argument("--sweep-var", choices=SWEEP_VARIABLES, help="Variable to sweep")
    sweep.add_argument(
        "--values",
        nargs="+",
        help="Sweep values (theta_max in degrees, power in dBm, Q as MxN)",
    )
    sweep.add_argument("--scenario", help="Scenario JSON file used for every trial")
    sweep.set_defaults(handler=command_sweep)

    validate = subparsers.add_parser("validate", help="Run oracle and invariant suites")
    _add_common_arguments(validate)
    validate.add_argument(
        "--scale", type=float, default=1.0, help="Multiplier on suite sample counts"
    )
    validate.add_argument("--report", help="Write the suite results to a JSON file")
    validate.set_defaults(handler=command_validate)

    ga = subparsers.add_parser("ga", help="Discrete-angle experiments")
    _add_common_arguments(ga)
    ga.add_argument("--levels", type=int, help="Grid levels per angle")
    ga.add_argument("--scenario", help="Scenario JSON file used for every trial")
    ga.set_defaults(handler=command_ga)

    return parser


def _load_config(args):
    config_manager = ConfigManager()
    config = config_manager.create_config(args, args.config)
    if config.verbose:
        config_manager.print_config(config)
    return config


def _run_experiment(config, args) -> int:
    scenario = load_scenario(args.scenario) if getattr(args, "scenario", None) else None
    ExperimentService(config).run(scenario)
    log_message("Experiment complete", "INFO", config.verbose)
    return 0


def command_run(args) -> int:
    return _run_experiment(_load_config(args), args)


def command_sweep(args) -> int:
    config = _load_config(args)
    if not config.sweep_var:
        raise ConfigError("sweep needs --sweep-var (or sweep_var in the config file)")
    return _run_experiment(config, args)


def command_ga(args) -> int:
    config = _load_config(args)
    if args.levels is not None:
        if args.levels < 1:
            raise ConfigError("--levels must be at least 1")
        config = replace(config, grid_levels=args.levels)
    if not args.scheme:
        schemes = [s for s in config.schemes if s in DISCRETE_SCHEMES]
        schemes = schemes or ["ga_element", "nearest_projection"]
        config = replace(config, schemes=schemes)
    return _run_experiment(config, args)


def command_validate(args) -> int:
    config = _load_config(args)
    validator = InvariantValidator(config.seed, args.scale, config.verbose)
    results = validator.run_all(config)
    print_validation_report(results)
    if args.report:
        save_results_to_json({"suites": results}, args.report)
    return 0 if all(r["passed"] for r in results) else 1


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and dispatch; returns the process exit status"""
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return 1
