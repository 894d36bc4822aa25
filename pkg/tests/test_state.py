"""
Test State Reconstruction and Envelope Checks
"""

import os
import sys
from dataclasses import replace

import numpy as np
import pytest

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from src.core.errors import EnvelopeViolationError, InvalidParameterError
from src.core.grid import build_grid
from src.core.state import (
    ENVELOPE_MARGIN,
    InitialDataSpec,
    State,
    check_envelope,
    divergence_residuals,
    make_initial_data,
    neumann_residual,
    reconstruct,
    state_with_envelope,
)


def shear_grid(ny=128, nx=16, ymax=10.0):
    return build_grid(nx, ny, ymax, 1.0, 2.0)


def test_reconstruct_x_independent_fields_gives_zero():
    grid = shear_grid()
    X, Y = grid.mesh()
    v, g = reconstruct(np.exp(-Y), (1.0 + Y * Y) ** -1, grid)
    assert np.allclose(v, 0.0, atol=1e-13)
    assert np.allclose(g, 0.0, atol=1e-13)


def test_reconstruct_matches_closed_forms():
    grid = shear_grid()
    X, Y = grid.mesh()
    u = np.sin(X) * Y * np.exp(-Y)
    f = np.cos(X) * np.exp(-Y)
    v, g = reconstruct(u, f, grid)
    assert np.all(v[0] == 0.0) and np.all(g[0] == 0.0)
    assert np.max(np.abs(g - np.sin(X) * (1.0 - np.exp(-Y)))) < 1e-3
    assert np.max(np.abs(v + np.cos(X) * (1.0 - (1.0 + Y) * np.exp(-Y)))) < 1e-3


def test_default_initial_data_satisfies_envelope():
    grid = shear_grid()
    state = make_initial_data(InitialDataSpec(), grid)
    report = check_envelope(state, grid)
    assert report.passed
    # the x = pi column at y = 0 carries the minimum 1 - amp_f
    assert report.min_ratio == pytest.approx(0.9, rel=1e-12)
    assert state.c == pytest.approx(ENVELOPE_MARGIN * report.admissible_c)
    assert state.c < report.min_ratio
    assert state.consistent


def test_zero_perturbation_is_pure_shear():
    grid = shear_grid()
    state = make_initial_data(InitialDataSpec(amp_u=0.0, amp_f=0.0), grid)
    X, Y = grid.mesh()
    assert np.all(state.u == 0.0)
    assert np.allclose(state.f, (1.0 + Y * Y) ** -1)
    assert check_envelope(state, grid).min_ratio == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(state.v, 0.0) and np.allclose(state.g, 0.0)


@pytest.mark.parametrize("amp_f", [1.0, 10.0])
def test_large_amplitude_is_rejected(amp_f):
    grid = shear_grid()
    with pytest.raises(EnvelopeViolationError):
        make_initial_data(InitialDataSpec(amp_f=amp_f), grid)


def test_initial_data_parameter_validation():
    grid = shear_grid()
    with pytest.raises(InvalidParameterError):
        make_initial_data(InitialDataSpec(mode=6), grid)
    with pytest.raises(InvalidParameterError):
        make_initial_data(InitialDataSpec(c0=-1.0), grid)
    with pytest.raises(InvalidParameterError):
        make_initial_data(InitialDataSpec(delta=3.0), grid)


def test_check_envelope_flags_a_zero_node():
    grid = shear_grid()
    state = make_initial_data(InitialDataSpec(), grid)
    f = state.f.copy()
    f[5, 3] = 0.0
    report = check_envelope(replace(state, f=f), grid)
    assert not report.lower_ok
    assert report.min_ratio == 0.0
    assert report.details["argmin_y"] == pytest.approx(grid.y_nodes[5])


def test_state_with_envelope_rejects_non_positive_f():
    grid = shear_grid()
    with pytest.raises(EnvelopeViolationError):
        state_with_envelope(grid.zeros(), grid.zeros(), 2.0, grid)


def test_divergence_residuals_x_independent():
    grid = shear_grid()
    state = make_initial_data(InitialDataSpec(amp_u=0.0, amp_f=0.0), grid)
    div_u, div_f = divergence_residuals(state, grid)
    assert div_u < 1e-12 and div_f < 1e-12


def test_divergence_residuals_converge_at_second_order():
    residuals = []
    for ny in (64, 128):
        grid = shear_grid(ny=ny)
        residuals.append(divergence_residuals(make_initial_data(InitialDataSpec(), grid), grid))
    ratio_u = residuals[0][0] / residuals[1][0]
    ratio_f = residuals[0][1] / residuals[1][1]
    assert 3.0 < ratio_u < 5.0
    assert 3.0 < ratio_f < 5.0


def test_divergence_residual_detects_corrupted_v():
    grid = shear_grid()
    state = make_initial_data(InitialDataSpec(), grid)
    X, Y = grid.mesh()
    clean_u, _ = divergence_residuals(state, grid)
    broken = replace(state, v=state.v + np.cos(X) * Y * np.exp(-Y), consistent=False)
    broken_u, _ = divergence_residuals(broken, grid)
    assert broken_u > 100.0 * clean_u


def test_replace_fields_reconstructs():
    grid = shear_grid()
    state = make_initial_data(InitialDataSpec(), grid)
    X, Y = grid.mesh()
    updated = state.replace_fields(grid, u=2.0 * state.u, t=0.5)
    assert updated.t == 0.5
    assert np.allclose(updated.v, 2.0 * state.v)
    assert updated.f is state.f


def test_neumann_residual_decreases_with_refinement():
    coarse, fine = shear_grid(ny=64), shear_grid(ny=256)
    r_coarse = neumann_residual(make_initial_data(InitialDataSpec(), coarse), coarse)
    r_fine = neumann_residual(make_initial_data(InitialDataSpec(), fine), fine)
    assert r_fine < r_coarse


def test_state_is_immutable():
    grid = shear_grid()
    state = State(t=0.0, u=grid.zeros(), f=grid.zeros(), v=grid.zeros(), g=grid.zeros(), c=0.0, delta=2.0)
    with pytest.raises(AttributeError):
        state.t = 1.0
