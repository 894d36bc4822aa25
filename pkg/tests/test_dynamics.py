"""
Test IMEX Time Stepping
Right-hand sides, implicit diffusion, CFL and positivity guards, evolution callbacks
"""

import os
import sys
from dataclasses import replace

import numpy as np
import pytest

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from src.core.dynamics import (
    SolverConfig,
    diffusion_matrix,
    effective_dt,
    evolve,
    g_equation_residual,
    imex_update,
    implicit_diffusion_f,
    rhs_f_explicit,
    rhs_u,
    step,
)
from src.core.errors import CflCollapseError, InvalidParameterError, NonFiniteError, PositivityLostError
from src.core.grid import build_grid
from src.core.state import InitialDataSpec, State, make_initial_data
from src.verify.heat_oracle import heat_oracle_1d


def zero_state(grid):
    return State(t=0.0, u=grid.zeros(), f=grid.zeros(), v=grid.zeros(), g=grid.zeros(), c=0.0, delta=grid.delta)


@pytest.mark.parametrize("kwargs, parameter", [
    (dict(dt=0.0), "dt"),
    (dict(cfl=1.5), "cfl"),
    (dict(f_floor=0.0), "f_floor"),
    (dict(tend=-1.0), "tend"),
    (dict(output_every=0), "output_every"),
])
def test_solver_config_validation(kwargs, parameter):
    with pytest.raises(InvalidParameterError) as excinfo:
        SolverConfig(**kwargs)
    assert excinfo.value.parameter == parameter


def test_zero_state_has_zero_rhs_and_is_a_fixed_point():
    grid = build_grid(8, 32, 5.0, 1.0, 2.0)
    state = zero_state(grid)
    assert np.all(rhs_u(state, grid) == 0.0)
    assert np.all(rhs_f_explicit(state, grid) == 0.0)
    after = imex_update(state, 1e-3, grid)
    assert np.all(after.u == 0.0) and np.all(after.f == 0.0)
    assert after.t == pytest.approx(1e-3)


def test_step_refuses_non_positive_f():
    grid = build_grid(8, 32, 5.0, 1.0, 2.0)
    with pytest.raises(PositivityLostError) as excinfo:
        step(zero_state(grid), SolverConfig(), grid)
    assert excinfo.value.t == 0.0


def test_shear_has_zero_transport():
    grid = build_grid(8, 64, 10.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(amp_u=0.0, amp_f=0.0), grid)
    assert np.allclose(rhs_u(state, grid), 0.0, atol=1e-14)
    assert np.allclose(rhs_f_explicit(state, grid), 0.0, atol=1e-14)


def test_diffusion_matrix_rows():
    A = diffusion_matrix(16, 0.5, 0.25).toarray()
    assert np.allclose(A[0, :3], [-3.0, 4.0, -1.0])
    assert A[-1, -1] == 1.0 and np.count_nonzero(A[-1]) == 1
    assert np.allclose(A[5, 4:7], [-1.0, 3.0, -1.0])


def test_implicit_diffusion_preserves_constants():
    grid = build_grid(4, 128, 10.0, 1.0, 2.0)
    ones = np.ones(grid.shape)
    assert np.allclose(implicit_diffusion_f(ones, 1e-3, grid, top=np.ones(grid.nx)), 1.0, atol=1e-13)
    # homogeneous top only pulls the last few nodes
    pulled = implicit_diffusion_f(ones, 1e-3, grid)
    assert np.allclose(pulled[: grid.ny // 2], 1.0, atol=1e-12)
    assert np.allclose(pulled[-1], 0.0, atol=1e-14)
    assert np.all(implicit_diffusion_f(grid.zeros(), 1e-3, grid) == 0.0)


def test_implicit_diffusion_rejects_bad_dt():
    grid = build_grid(4, 32, 5.0, 1.0, 2.0)
    with pytest.raises(InvalidParameterError):
        implicit_diffusion_f(grid.zeros(), 0.0, grid)


def test_effective_dt_follows_cfl_and_remaining_time():
    grid = build_grid(8, 64, 10.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(), grid)
    cfg = SolverConfig(dt=10.0, cfl=0.4)
    speed_x = np.max(np.abs(state.u)) + np.max(np.abs(state.f)) + 1e-12
    speed_y = np.max(np.abs(state.v)) + np.max(np.abs(state.g)) + 1e-12
    expected = 0.4 * min(grid.hx / speed_x, grid.hy / speed_y)
    assert effective_dt(state, cfg, grid) == pytest.approx(expected)
    assert effective_dt(state, SolverConfig(dt=1e-3), grid) == 1e-3
    assert effective_dt(state, SolverConfig(dt=1e-3), grid, t_remaining=2e-4) == 2e-4


def test_cfl_collapse_is_reported():
    grid = build_grid(8, 32, 5.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(), grid)
    fast = replace(state, u=np.full(grid.shape, 1e13))
    with pytest.raises(CflCollapseError):
        step(fast, SolverConfig(), grid)


def test_non_finite_input_is_reported():
    grid = build_grid(8, 32, 5.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(), grid)
    u = state.u.copy()
    u[3, 2] = np.nan
    with pytest.raises(NonFiniteError) as excinfo:
        step(replace(state, u=u), SolverConfig(), grid)
    assert excinfo.value.field_name == "u"


def test_x_independent_manifold_is_invariant():
    grid = build_grid(8, 64, 10.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(amp_u=0.0, amp_f=0.0), grid)
    final = evolve(state, SolverConfig(dt=1e-3, tend=0.01), grid)
    assert np.max(np.abs(final.u)) < 1e-12
    assert np.max(np.abs(final.f - final.f[:, :1])) < 1e-13


def test_step_commutes_with_x_translation():
    grid = build_grid(16, 64, 10.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(), grid)
    cfg = SolverConfig(dt=1e-3)
    shifted = state.replace_fields(grid, u=np.roll(state.u, 2, axis=1), f=np.roll(state.f, 2, axis=1))
    a = step(shifted, cfg, grid)
    b = step(state, cfg, grid)
    assert np.allclose(a.u, np.roll(b.u, 2, axis=1), atol=1e-12)
    assert np.allclose(a.f, np.roll(b.f, 2, axis=1), atol=1e-12)


def test_evolve_reaches_tend_and_reports_outputs():
    grid = build_grid(8, 64, 10.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(), grid)
    cfg = SolverConfig(dt=1e-3, tend=0.0105, output_every=4)
    outputs, steps = [], []
    final = evolve(state, cfg, grid, on_output=lambda n, s, prev: outputs.append((n, s.t, prev is None)),
                   on_step=lambda n, s: steps.append(n))
    assert final.t == pytest.approx(0.0105, abs=1e-12)
    assert steps == list(range(1, 12))
    assert [n for n, _, _ in outputs] == [0, 4, 8, 11]
    assert outputs[0][2] and not outputs[-1][2]


def test_evolve_with_zero_tend_only_reports_initial_state():
    grid = build_grid(8, 32, 5.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(), grid)
    outputs = []
    final = evolve(state, SolverConfig(tend=0.0), grid, on_output=lambda n, s, prev: outputs.append(n))
    assert final is state
    assert outputs == [0]


def test_x_independent_run_matches_heat_oracle():
    grid = build_grid(4, 512, 20.0, 1.0, 2.0)
    state = make_initial_data(InitialDataSpec(amp_u=0.0, amp_f=0.0), grid)
    final = evolve(state, SolverConfig(dt=1e-4, tend=0.1, output_every=100), grid)
    oracle = heat_oracle_1d(state.f[:, 0], 1e-4, 0.1, 512, 20.0)
    # implicit Euler against Crank-Nicolson, plus the one-sided Neumann row, leaves about 2e-5
    assert np.max(np.abs(final.f - oracle[:, None])) < 2.5e-5


def test_g_equation_residual():
    grid = build_grid(8, 64, 10.0, 1.0, 2.0)
    cfg = SolverConfig(dt=1e-3)
    flat = make_initial_data(InitialDataSpec(amp_u=0.0, amp_f=0.0), grid)
    assert g_equation_residual(step(flat, cfg, grid), flat, grid) < 1e-10

    state = make_initial_data(InitialDataSpec(), grid)
    nxt = step(state, cfg, grid)
    clean = g_equation_residual(nxt, state, grid)
    broken = g_equation_residual(replace(nxt, g=nxt.g + 1.0, consistent=False), state, grid)
    assert broken > 10.0 * clean
    with pytest.raises(InvalidParameterError):
        g_equation_residual(state, nxt, grid)
