"""
Run orchestrator
Drives one simulation: setup -> evolve -> persist, mapping every outcome to an exit code
"""

import time
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import List, Optional

import structlog

from src.config.settings import RunConfig, get_settings
from src.core.diagnostics import EnergyReport, energy_report
from src.core.dynamics import evolve
from src.core.errors import MhdBoundaryLayerError, PositivityLostError, SolverAbort
from src.core.grid import Grid
from src.core.state import State, make_initial_data
from src.utils.results_writer import ResultsWriter, RunStatus, RunSummary
from src.utils.snapshot_io import write_snapshot

logger = structlog.get_logger(__name__)


class ExitCode(IntEnum):
    OK = 0
    INVALID_INPUT = 1
    SOLVER_STOPPED = 2
    VERIFICATION_FAILED = 3


class RunStage(Enum):
    """Run execution stages"""
    PENDING = "pending"
    SETUP = "setup"
    EVOLVE = "evolve"
    COMPLETE = "complete"
    FAILED = "failed"


@dataclass
class RunContext:
    """State shared across the stages of one run"""
    config: RunConfig
    output_dir: Path
    stage: RunStage = RunStage.PENDING
    grid: Optional[Grid] = None
    initial: Optional[State] = None
    latest: Optional[State] = None
    steps: int = 0
    history: List[EnergyReport] = field(default_factory=list)
    snapshots: List[str] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)
    start_time: float = field(default_factory=time.time)


class RunOrchestrator:
    """
    Orchestrates one run:
    Setup → Evolve (diagnostics + snapshots) → Persist
    """

    def execute(self, config: RunConfig, output_dir: Optional[str] = None) -> ExitCode:
        target = Path(output_dir or config.output_dir or get_settings().output_dir)
        context = RunContext(config=config, output_dir=target)
        writer = ResultsWriter(target)
        logger.info("run started", output_dir=str(target), nx=config.nx, ny=config.ny, tend=config.tend)

        try:
            self._run_setup_stage(context)
        except MhdBoundaryLayerError as exc:
            context.stage = RunStage.FAILED
            context.errors.append(str(exc))
            logger.error("invalid run setup", error=str(exc))
            writer.write_run_report(RunSummary(status=RunStatus.ABORTED, t_final=0.0, tend=config.tend,
                                               steps=0, message=str(exc)))
            return ExitCode.INVALID_INPUT

        exit_code = ExitCode.OK
        summary_status = RunStatus.COMPLETED
        failure_time = None
        message = ""
        try:
            self._run_evolve_stage(context, writer)
            context.stage = RunStage.COMPLETE
        except PositivityLostError as exc:
            context.stage = RunStage.FAILED
            exit_code, summary_status, failure_time, message = (
                ExitCode.SOLVER_STOPPED, RunStatus.POSITIVITY_LOST, exc.t, str(exc))
            logger.warning("positivity lost", t=exc.t, min_ratio=exc.min_ratio)
        except SolverAbort as exc:
            context.stage = RunStage.FAILED
            exit_code, summary_status, failure_time, message = (
                ExitCode.SOLVER_STOPPED, RunStatus.ABORTED, exc.t, str(exc))
            logger.warning("solver aborted", t=exc.t, error=str(exc))
        if message:
            context.errors.append(message)

        self._persist(context, writer)
        writer.write_run_report(RunSummary(
            status=summary_status,
            t_final=context.latest.t if context.latest is not None else 0.0,
            tend=config.tend,
            steps=context.steps,
            failure_time=failure_time,
            message=message,
            snapshots=context.snapshots,
        ))
        logger.info("run finished", stage=context.stage.value, steps=context.steps,
                    duration=round(time.time() - context.start_time, 3))
        return exit_code

    def _run_setup_stage(self, context: RunContext) -> None:
        context.stage = RunStage.SETUP
        config = context.config
        context.grid = config.grid()
        context.initial = make_initial_data(config.initial_data_spec(), context.grid)
        context.latest = context.initial

    def _run_evolve_stage(self, context: RunContext, writer: ResultsWriter) -> None:
        context.stage = RunStage.EVOLVE
        config = context.config
        grid = context.grid
        cfg = config.solver_config()
        if config.snapshot_every:
            self._snapshot(context, writer, context.initial, "snapshot_initial.mhdbl")

        def on_step(n: int, state: State) -> None:
            context.steps = n
            context.latest = state
            if config.snapshot_every and n % config.snapshot_every == 0:
                self._snapshot(context, writer, state, f"snapshot_{n:06d}.mhdbl")

        def on_output(n: int, state: State, previous: Optional[State]) -> None:
            report = energy_report(state, grid, previous, context.history, cfg.f_floor)
            context.history.append(report)
            logger.info("diagnostics", step=n, t=state.t, E=report.E, D=report.D, cstar=report.cstar)

        evolve(context.initial, cfg, grid, on_output=on_output, on_step=on_step)

    def _snapshot(self, context: RunContext, writer: ResultsWriter, state: State, name: str) -> None:
        write_snapshot(writer.path(name), state, context.grid)
        context.snapshots.append(name)

    def _persist(self, context: RunContext, writer: ResultsWriter) -> None:
        writer.write_timeseries(context.history)
        writer.write_norm_breakdown(context.history)
        if context.latest is not None:
            self._snapshot(context, writer, context.latest, "snapshot_final.mhdbl")


# Global run orchestrator
run_orchestrator = RunOrchestrator()


def get_run_orchestrator() -> RunOrchestrator:
    """Get the global run orchestrator"""
    return run_orchestrator
