"""
Test the Command-Line Surface
`run` and `verify` end to end, including exit codes and the files they leave behind
"""

import json
import os
import sys

import numpy as np
import pandas as pd
import pytest

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from src.core.diagnostics import CSV_COLUMNS
from src.main import main
from src.pipeline.run_orchestrator import ExitCode, RunOrchestrator
from src.config.settings import RunConfig

SMALL_RUN = {
    "nx": 8,
    "ny": 32,
    "ymax": 8.0,
    "dt": 0.001,
    "tend": 0.005,
    "output_every": 2,
    "snapshot_every": 2,
}


def write_config(tmp_path, **values):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(values))
    return str(path)


def test_run_completes_and_writes_results(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", write_config(tmp_path, **SMALL_RUN), "--output-dir", str(out)])
    assert code == ExitCode.OK

    frame = pd.read_csv(out / "timeseries.csv")
    assert list(frame.columns) == CSV_COLUMNS
    assert frame["t"].iloc[0] == 0.0
    assert frame["t"].iloc[-1] == pytest.approx(0.005)
    assert frame["Cstar"].iloc[0] == pytest.approx(1.0)
    assert len(frame) == 4

    breakdown = pd.read_csv(out / "norm_breakdown.csv")
    assert len(breakdown) == 4 and "u_dx4_dy0" in breakdown.columns and "f_dx0_dy4" in breakdown.columns
    terms = breakdown.drop(columns="t").sum(axis=1)
    assert np.allclose(terms, frame["E"], rtol=1e-12)

    report = (out / "run_report.txt").read_text()
    assert "status: completed" in report
    for name in ("snapshot_initial.mhdbl", "snapshot_000002.mhdbl", "snapshot_000004.mhdbl",
                 "snapshot_final.mhdbl"):
        assert (out / name).is_file()


def test_positivity_loss_exits_with_solver_stopped(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, **SMALL_RUN, f_floor=0.95)
    assert main(["run", "--config", config, "--output-dir", str(out)]) == ExitCode.SOLVER_STOPPED
    report = (out / "run_report.txt").read_text()
    assert "status: positivity_lost" in report
    assert "failure_time: 0.0" in report
    assert (out / "timeseries.csv").is_file()
    assert (out / "snapshot_final.mhdbl").is_file()


def test_orchestrator_rejects_unrepresentable_mode(tmp_path):
    config = RunConfig(**SMALL_RUN, mode=4)
    code = RunOrchestrator().execute(config, output_dir=str(tmp_path))
    assert code == ExitCode.INVALID_INPUT
    assert "status: aborted" in (tmp_path / "run_report.txt").read_text()


@pytest.mark.parametrize("argv_tail", [
    [],
    ["--config"],
])
def test_bad_arguments_exit_with_invalid_input(argv_tail):
    assert main(["run", *argv_tail]) == ExitCode.INVALID_INPUT


def test_invalid_config_exits_with_invalid_input(tmp_path):
    assert main(["run", "--config", write_config(tmp_path, nx=12)]) == ExitCode.INVALID_INPUT
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == ExitCode.INVALID_INPUT


def test_unknown_suite_exits_with_invalid_input(tmp_path):
    config = write_config(tmp_path, **SMALL_RUN)
    assert main(["verify", "spectra", "--config", config, "--output-dir", str(tmp_path)]) == ExitCode.INVALID_INPUT


def test_verify_trace_passes(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, **SMALL_RUN, trace_trials=3)
    assert main(["verify", "trace", "--config", config, "--output-dir", str(out)]) == ExitCode.OK
    assert (out / "trace_report.csv").is_file()
    assert "status: passed" in (out / "trace_report.txt").read_text()


def test_verify_failure_exits_with_verification_failed(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, **SMALL_RUN, oracle_ny=64, oracle_tend=0.01, oracle_tolerance=1e-9)
    assert main(["verify", "oracle-heat", "--config", config, "--output-dir", str(out)]) == ExitCode.VERIFICATION_FAILED
    text = (out / "oracle-heat_report.txt").read_text()
    assert "status: failed" in text
    assert "FAILED: solver and oracle differ" in text


def test_seed_override_is_applied(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    config = write_config(tmp_path, **SMALL_RUN, trace_trials=2)
    main(["verify", "trace", "--config", config, "--output-dir", str(out_a), "--seed", "5"])
    main(["verify", "trace", "--config", config, "--output-dir", str(out_b), "--seed", "6"])
    first = pd.read_csv(out_a / "trace_report.csv")
    second = pd.read_csv(out_b / "trace_report.csv")
    assert not first["lhs"].equals(second["lhs"])


@pytest.mark.slow
def test_verify_oracle_heat_passes_at_default_resolution(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, **{**SMALL_RUN, "ymax": 20.0})
    assert main(["verify", "oracle-heat", "--config", config, "--output-dir", str(out)]) == ExitCode.OK
