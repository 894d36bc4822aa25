"""
Result files: timeseries.csv, norm_breakdown.csv, per-suite verification reports and run summaries
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional

import pandas as pd
import structlog

from src.core.diagnostics import CSV_COLUMNS, EnergyReport
from src.verify.report import FLOAT_FORMAT, VerificationReport

logger = structlog.get_logger(__name__)

TIMESERIES_FILE = "timeseries.csv"
BREAKDOWN_FILE = "norm_breakdown.csv"
RUN_REPORT_FILE = "run_report.txt"
SUMMARY_FILE = "summary.txt"


class RunStatus(Enum):
    COMPLETED = "completed"
    POSITIVITY_LOST = "positivity_lost"
    ABORTED = "aborted"


@dataclass
class RunSummary:
    """What run_report.txt states about one run"""
    status: RunStatus
    t_final: float
    tend: float
    steps: int
    failure_time: Optional[float] = None
    message: str = ""
    snapshots: List[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"status: {self.status.value}",
            f"t_final: {float(self.t_final)!r}",
            f"tend: {float(self.tend)!r}",
            f"steps: {self.steps}",
        ]
        if self.failure_time is not None:
            lines.append(f"failure_time: {float(self.failure_time)!r}")
        if self.message:
            lines.append(f"message: {self.message}")
        lines.extend(f"snapshot: {name}" for name in self.snapshots)
        return "\n".join(lines) + "\n"


class ResultsWriter:
    """Single writer for everything a run or a verify invocation leaves in output_dir"""

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def write_timeseries(self, history: List[EnergyReport]) -> Path:
        frame = pd.DataFrame([report.to_row() for report in history], columns=CSV_COLUMNS)
        target = self.path(TIMESERIES_FILE)
        frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, na_rep="nan")
        return target

    def write_norm_breakdown(self, history: List[EnergyReport]) -> Path:
        """One row per output time: t and every (i, j) term of E"""
        columns = ["t"] + (list(history[0].norm_breakdown) if history else [])
        frame = pd.DataFrame([{"t": report.t, **report.norm_breakdown} for report in history], columns=columns)
        target = self.path(BREAKDOWN_FILE)
        frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, na_rep="nan")
        return target

    def write_run_report(self, summary: RunSummary) -> Path:
        target = self.path(RUN_REPORT_FILE)
        target.write_text(summary.to_text(), encoding="utf-8")
        logger.info("run report written", path=str(target), status=summary.status.value)
        return target

    def write_verification(self, suite: str, report: VerificationReport) -> List[Path]:
        csv_path = self.path(f"{suite}_report.csv")
        txt_path = self.path(f"{suite}_report.txt")
        report.to_csv(csv_path)
        txt_path.write_text(report.to_text(), encoding="utf-8")
        return [csv_path, txt_path]

    def write_summary(self, outcomes: List[VerificationReport]) -> Path:
        lines = [f"{report.name}: {report.status.value}" for report in outcomes]
        failed = [report.name for report in outcomes if not report.passed]
        lines.append(f"overall: {'failed (' + ', '.join(failed) + ')' if failed else 'passed'}")
        target = self.path(SUMMARY_FILE)
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return target
