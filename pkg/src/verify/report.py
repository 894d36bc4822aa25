"""
Verification reports and convergence-order fitting
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"


class VerificationStatus(Enum):
    PASSED = "passed"
    FAILED = "failed"


@dataclass
class VerificationReport:
    """Outcome of one experiment: per-resolution measurements plus fitted orders and ratios"""
    name: str
    resolutions: List[Any]
    measurements: List[Dict[str, Any]] = field(default_factory=list)
    orders: Dict[str, float] = field(default_factory=dict)
    ratios: Dict[str, float] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def status(self) -> VerificationStatus:
        return VerificationStatus.PASSED if self.passed else VerificationStatus.FAILED

    def require(self, condition: bool, message: str) -> None:
        """Record a failed tolerance check"""
        if not condition:
            self.failures.append(message)

    def to_frame(self) -> pd.DataFrame:
        """One row per measurement; summary values are repeated in experiment-level columns"""
        frame = pd.DataFrame(self.measurements)
        if frame.empty:
            frame = pd.DataFrame([{}])
        frame.insert(0, "experiment", self.name)
        for key, value in {**self.orders, **self.ratios}.items():
            frame[key] = value
        frame["passed"] = self.passed
        return frame

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan")

    def to_text(self) -> str:
        lines = [f"experiment: {self.name}", f"status: {self.status.value}", f"resolutions: {self.resolutions}"]
        for key, value in self.orders.items():
            lines.append(f"order {key}: {value:.6g}")
        for key, value in self.ratios.items():
            lines.append(f"ratio {key}: {value:.6g}")
        for key, value in self.tolerances.items():
            lines.append(f"tolerance {key}: {value:.6g}")
        if self.measurements:
            lines.append("measurements:")
            lines.append(pd.DataFrame(self.measurements).to_string(index=False, float_format=lambda v: f"{v:.6g}"))
        for note in self.notes:
            lines.append(f"note: {note}")
        for failure in self.failures:
            lines.append(f"FAILED: {failure}")
        return "\n".join(lines) + "\n"


def fit_order(h: Sequence[float], err: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(h); nan when fewer than two usable points"""
    h_arr = np.asarray(h, dtype=float)
    err_arr = np.asarray(err, dtype=float)
    usable = (h_arr > 0) & (err_arr > 0) & np.isfinite(err_arr)
    if np.count_nonzero(usable) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(h_arr[usable]), np.log(err_arr[usable]), 1)
    return float(slope)


def relative_variation(values: Sequence[float]) -> float:
    """(max - min) / min over finite values; nan when none are usable"""
    arr = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if arr.size == 0 or np.min(np.abs(arr)) == 0:
        return float("nan")
    return float((np.max(arr) - np.min(arr)) / np.min(np.abs(arr)))
