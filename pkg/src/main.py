"""
MHD boundary-layer simulator - command-line entry point

    python -m src.main run --config configs/default.json
    python -m src.main verify oracle-heat --config configs/default.json
"""

import argparse
import os
import sys
from typing import List, Optional

# Load environment variables FIRST
from dotenv import load_dotenv

load_dotenv(os.path.join(os.path.dirname(os.path.dirname(__file__)), ".env"))

# Add project root to path for imports
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

import structlog

from src.config.settings import RunConfig, get_settings, load_run_config
from src.core.errors import MhdBoundaryLayerError, SolverAbort
from src.pipeline.run_orchestrator import ExitCode, get_run_orchestrator
from src.pipeline.verify_suites import resolve_suites, run_suites
from src.utils.logging_setup import configure_logging
from src.utils.results_writer import ResultsWriter

logger = structlog.get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mhd-bl", description="Inviscid MHD boundary-layer simulator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="flat JSON run configuration")
    common.add_argument("--output-dir", default=None, help="overrides output_dir from the config")
    common.add_argument("--seed", type=int, default=None, help="overrides seed from the config")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="evolve the configured initial data to tend")
    verify = sub.add_parser("verify", parents=[common], help="run a verification suite")
    verify.add_argument("suite", help="mms, commutator, hardy, energy, oracle-heat, trace, identities or all")
    return parser


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {}
    if args.output_dir is not None:
        updates["output_dir"] = args.output_dir
    if args.seed is not None:
        updates["seed"] = args.seed
    return config.model_copy(update=updates) if updates else config


def cmd_run(config: RunConfig) -> int:
    return int(get_run_orchestrator().execute(config))


def cmd_verify(suite: str, config: RunConfig) -> int:
    resolve_suites(suite)
    writer = ResultsWriter(config.output_dir or get_settings().output_dir)
    reports = run_suites(suite, config)
    for report in reports:
        writer.write_verification(report.name, report)
    if suite == "all":
        writer.write_summary(reports)

    failed = [report for report in reports if not report.passed]
    for report in failed:
        print(f"verification failed: {report.name}: {'; '.join(report.failures)}", file=sys.stderr)
    return int(ExitCode.VERIFICATION_FAILED if failed else ExitCode.OK)


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    configure_logging(settings.log_level, settings.log_json)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(ExitCode.OK if exc.code == 0 else ExitCode.INVALID_INPUT)

    try:
        config = _apply_overrides(load_run_config(args.config), args)
        if args.command == "run":
            return cmd_run(config)
        return cmd_verify(args.suite, config)
    except SolverAbort as exc:
        print(f"solver stopped: {exc}", file=sys.stderr)
        logger.error("solver stopped", command=args.command, t=exc.t, error=str(exc))
        return int(ExitCode.SOLVER_STOPPED if args.command == "run" else ExitCode.VERIFICATION_FAILED)
    except MhdBoundaryLayerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        logger.error("command failed", command=args.command, error=str(exc))
        return int(ExitCode.INVALID_INPUT)


if __name__ == "__main__":
    sys.exit(main())
