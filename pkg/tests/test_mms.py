"""
Test the Manufactured-Solution Harness
Closed-form sources against finite differences, the exactly steady case, and convergence orders
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from src.core import spectral
from src.core.dynamics import SolverConfig
from src.core.grid import build_grid, dy
from src.core.state import reconstruct
from src.verify.mms import MmsCase, run_mms


def test_sources_match_finite_difference_residual():
    case = MmsCase()
    grid = build_grid(16, 1024, 10.0, 1.0, 2.0)
    X, Y = grid.mesh()
    t, eps = 0.3, 1e-5
    z = case.fields(t, X, Y)
    later, earlier = case.fields(t + eps, X, Y), case.fields(t - eps, X, Y)
    u, v, f, g = z["u"], z["v"], z["f"], z["g"]

    u_t = (later["u"] - earlier["u"]) / (2.0 * eps)
    f_t = (later["f"] - earlier["f"]) / (2.0 * eps)
    residual_u = u_t + u * spectral.dx(u) + v * dy(u, 1, grid) - f * spectral.dx(f) - g * dy(f, 1, grid)
    residual_f = (f_t + u * spectral.dx(f) + v * dy(f, 1, grid) - f * spectral.dx(u) - g * dy(u, 1, grid)
                  - dy(f, 2, grid))

    s_u, s_f = case.sources(t, X, Y)
    assert np.max(np.abs(residual_u - s_u)) < 1e-4
    assert np.max(np.abs(residual_f - s_f)) < 1e-4


def test_manufactured_fields_are_divergence_free():
    case = MmsCase()
    grid = build_grid(16, 1024, 10.0, 1.0, 2.0)
    X, Y = grid.mesh()
    z = case.fields(0.2, X, Y)
    v, g = reconstruct(z["u"], z["f"], grid)
    assert np.max(np.abs(v - z["v"])) < 1e-4
    assert np.max(np.abs(g - z["g"])) < 1e-4
    assert np.all(z["v"][0] == 0.0) and np.all(np.abs(z["g"][0]) == 0.0)


def test_steady_case_sources_vanish():
    case = MmsCase.steady(c0=2.0)
    grid = build_grid(8, 64, 10.0, 1.0, 2.0)
    X, Y = grid.mesh()
    s_u, s_f = case.sources(0.5, X, Y)
    assert np.all(s_u == 0.0) and np.all(s_f == 0.0)
    assert np.allclose(case.fields(0.5, X, Y)["f"], 2.0)


def test_steady_case_is_reproduced_to_roundoff():
    levels = [(8, 32, 1e-3), (8, 64, 1e-3)]
    report = run_mms(MmsCase.steady(), levels, SolverConfig(tend=0.01), ymax=10.0)
    assert report.passed, report.failures
    assert report.ratios["max_error"] <= 1e-10
    assert len(report.measurements) == 2


def test_solution_error_is_zero_at_initial_time():
    case = MmsCase()
    grid = build_grid(8, 128, 20.0, 1.0, 2.0)
    assert case.solution_error(case.initial_state(grid), grid) == 0.0


def test_missing_level_groups_are_noted():
    levels = [(8, 64, 1e-3), (8, 128, 1e-3)]
    report = run_mms(MmsCase(), levels, SolverConfig(tend=0.002), ymax=20.0, check_x=False)
    assert "spatial" not in report.orders and "temporal" not in report.orders
    assert len(report.notes) == 2


@pytest.mark.slow
def test_spatial_order_reaches_third():
    levels = [(16, 128, 1e-4), (16, 256, 1e-4), (16, 512, 1e-4), (16, 256, 4e-4), (16, 256, 2e-4)]
    report = run_mms(MmsCase(), levels, SolverConfig(tend=0.02), ymax=20.0)
    assert report.orders["spatial"] >= 3.0, report.to_text()
    assert report.orders["temporal"] >= 0.9, report.to_text()
    assert report.tolerances["x_error_fraction"] == 0.1
    spatial = sorted((m for m in report.measurements if m["dt"] == 1e-4), key=lambda m: m["ny"])
    errors = [m["error"] for m in spatial]
    assert errors[0] > errors[1] > errors[2]
    assert report.passed, report.failures


@pytest.mark.slow
def test_temporal_order_is_at_least_first():
    levels = [(8, 128, 4e-3), (8, 128, 2e-3), (8, 128, 1e-3)]
    report = run_mms(MmsCase(), levels, SolverConfig(tend=0.1), ymax=20.0, check_x=False)
    assert report.orders["temporal"] >= 0.9, report.to_text()
