"""
Time evolution of the resistive, inviscid boundary-layer system

    (d_t + u d_x + v d_y) u - (f d_x + g d_y) f = 0
    (d_t + u d_x + v d_y - d_y^2) f - (f d_x + g d_y) u = 0

IMEX Euler: transport and stretching are explicit, the single diffusion
d_y^2 f is implicit. The normal transport pair is upwinded in the
characteristic (Elsasser) variables z+- = u +- f, which travel with
normal speed v -+ g.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import structlog
from scipy.sparse.linalg import splu

from src.core import spectral
from src.core.errors import (
    CflCollapseError,
    InvalidParameterError,
    NonFiniteError,
    PositivityLostError,
    SingularSolveError,
)
from src.core.grid import Grid, dy, upwind_dy, weight_field, weighted_l2
from src.core.state import State

logger = structlog.get_logger(__name__)

EPS0 = 1e-12
MIN_DT = 1e-12

Sources = Tuple[np.ndarray, np.ndarray]
Forcing = Callable[[float], Sources]


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls"""
    dt: float = 1e-3
    cfl: float = 0.4
    tend: float = 0.1
    f_floor: float = 1e-3
    output_every: int = 10
    dealias: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError("dt", f"must be positive, got {self.dt}")
        if not 0.0 < self.cfl <= 1.0:
            raise InvalidParameterError("cfl", f"must lie in (0, 1], got {self.cfl}")
        if not self.f_floor > 0:
            raise InvalidParameterError("f_floor", f"must be positive, got {self.f_floor}")
        if self.tend < 0:
            raise InvalidParameterError("tend", f"must be non-negative, got {self.tend}")
        if self.output_every < 1:
            raise InvalidParameterError("output_every", f"must be >= 1, got {self.output_every}")


def _product(dealias: bool):
    return spectral.dealiased_product if dealias else np.multiply


def _filtered(field: np.ndarray, dealias: bool) -> np.ndarray:
    return spectral.two_thirds_filter(field) if dealias else field


def normal_transport(state: State, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """Upwinded (-v d_y u + g d_y f, -v d_y f + g d_y u).

    Far-field ghosts continue u by 0 and f by its value at Ymax.
    """
    z_plus = state.u + state.f
    z_minus = state.u - state.f
    speed_plus = state.v - state.g
    speed_minus = state.v + state.g

    top_f = np.repeat(state.f[-1:], 2, axis=0)
    t_plus = -speed_plus * upwind_dy(z_plus, speed_plus, grid, top_ghost=top_f)
    t_minus = -speed_minus * upwind_dy(z_minus, speed_minus, grid, top_ghost=-top_f)
    return 0.5 * (t_plus + t_minus), 0.5 * (t_plus - t_minus)


def rhs_u(state: State, grid: Grid, dealias: bool = True) -> np.ndarray:
    """-u d_x u - v d_y u + f d_x f + g d_y f"""
    mul = _product(dealias)
    tangential = -mul(state.u, spectral.dx(state.u)) + mul(state.f, spectral.dx(state.f))
    normal_u, _ = normal_transport(state, grid)
    return tangential + _filtered(normal_u, dealias)


def rhs_f_explicit(state: State, grid: Grid, dealias: bool = True) -> np.ndarray:
    """-u d_x f - v d_y f + f d_x u + g d_y u; diffusion is left to the implicit solve"""
    mul = _product(dealias)
    tangential = -mul(state.u, spectral.dx(state.f)) + mul(state.f, spectral.dx(state.u))
    _, normal_f = normal_transport(state, grid)
    return tangential + _filtered(normal_f, dealias)


def diffusion_matrix(ny: int, hy: float, dt: float) -> sp.csc_matrix:
    """I - dt d_y^2 with a Neumann row at y=0 and an identity (Dirichlet) row at Ymax"""
    n = ny + 1
    r = dt / (hy * hy)
    main = np.full(n, 1.0 + 2.0 * r)
    off = np.full(n - 1, -r)
    A = sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    # one-sided second-order d_y f = 0
    A[0, 0], A[0, 1], A[0, 2] = -3.0, 4.0, -1.0
    A[n - 1, n - 2] = 0.0
    A[n - 1, n - 1] = 1.0
    return A.tocsc()


@lru_cache(maxsize=32)
def _factorized(ny: int, hy: float, dt: float):
    try:
        return splu(diffusion_matrix(ny, hy, dt))
    except RuntimeError as exc:
        raise SingularSolveError(f"diffusion matrix singular for ny={ny}, hy={hy:.3g}, dt={dt:.3g}: {exc}") from exc


def implicit_diffusion_f(f: np.ndarray, dt: float, grid: Grid, top: Optional[np.ndarray] = None) -> np.ndarray:
    """Solve (I - dt d_y^2) f+ = f for every x-column at once.

    top is the Dirichlet datum at Ymax; None means homogeneous.
    """
    if not dt > 0:
        raise InvalidParameterError("dt", f"must be positive, got {dt}")
    rhs = np.array(f, dtype=float, copy=True)
    rhs[0] = 0.0
    rhs[-1] = 0.0 if top is None else top
    solution = _factorized(grid.ny, grid.hy, float(dt)).solve(rhs)
    if not np.all(np.isfinite(solution)):
        raise SingularSolveError("implicit diffusion produced non-finite values")
    return solution


def effective_dt(state: State, cfg: SolverConfig, grid: Grid, t_remaining: Optional[float] = None) -> float:
    """CFL-limited step; the diffusion adds no restriction"""
    speed_x = float(np.max(np.abs(state.u)) + np.max(np.abs(state.f))) + EPS0
    speed_y = float(np.max(np.abs(state.v)) + np.max(np.abs(state.g))) + EPS0
    dt = min(cfg.dt, cfg.cfl * min(grid.hx / speed_x, grid.hy / speed_y))
    if not np.isfinite(dt) or dt < MIN_DT:
        raise CflCollapseError(state.t, dt)
    if t_remaining is not None:
        dt = min(dt, t_remaining)
    return dt


def min_envelope_ratio(f: np.ndarray, delta: float, grid: Grid) -> float:
    return float(np.min(f * weight_field(delta, grid)))


def _check_finite(t: float, **fields: np.ndarray) -> None:
    for name, values in fields.items():
        if not np.all(np.isfinite(values)):
            raise NonFiniteError(t, name)


def imex_update(state: State, dt: float, grid: Grid, sources: Optional[Sources] = None,
                dealias: bool = True) -> State:
    """The bare IMEX Euler transition, without stability guards"""
    du = rhs_u(state, grid, dealias)
    df = rhs_f_explicit(state, grid, dealias)
    if sources is not None:
        du = du + sources[0]
        df = df + sources[1]
    u_new = state.u + dt * du
    f_tilde = state.f + dt * df
    f_new = implicit_diffusion_f(f_tilde, dt, grid, top=state.f[-1])
    return state.replace_fields(grid, u=u_new, f=f_new, t=state.t + dt)


def step(state: State, cfg: SolverConfig, grid: Grid, sources: Optional[Sources] = None,
         t_remaining: Optional[float] = None) -> State:
    """One guarded IMEX Euler step; sources (S_u, S_f) are evaluated at state.t by the caller"""
    _check_finite(state.t, u=state.u, f=state.f)
    floor_ratio = min_envelope_ratio(state.f, state.delta, grid)
    if floor_ratio < cfg.f_floor:
        raise PositivityLostError(state.t, floor_ratio, cfg.f_floor)

    dt = effective_dt(state, cfg, grid, t_remaining)
    new_state = imex_update(state, dt, grid, sources, cfg.dealias)
    _check_finite(new_state.t, u=new_state.u, f=new_state.f)

    floor_ratio = min_envelope_ratio(new_state.f, new_state.delta, grid)
    if floor_ratio < cfg.f_floor:
        raise PositivityLostError(new_state.t, floor_ratio, cfg.f_floor)
    return new_state


OutputCallback = Callable[[int, State, Optional[State]], None]
StepCallback = Callable[[int, State], None]


def evolve(state: State, cfg: SolverConfig, grid: Grid, on_output: Optional[OutputCallback] = None,
           forcing: Optional[Forcing] = None, on_step: Optional[StepCallback] = None) -> State:
    """Step from state.t to cfg.tend.

    on_output(n, state, previous) fires at n=0, every output_every steps
    and on the final state; on_step(n, state) after every step.
    """
    tol = 1e-9 * cfg.dt
    n = 0
    previous: Optional[State] = None
    if on_output is not None:
        on_output(0, state, None)
    last_reported = 0

    while cfg.tend - state.t > tol:
        sources = forcing(state.t) if forcing is not None else None
        previous, state = state, step(state, cfg, grid, sources, cfg.tend - state.t)
        n += 1
        if on_step is not None:
            on_step(n, state)
        if n % cfg.output_every == 0:
            logger.debug("step", step=n, t=state.t, dt=state.t - previous.t)
            if on_output is not None:
                on_output(n, state, previous)
            last_reported = n

    if on_output is not None and last_reported != n:
        on_output(n, state, previous)
    return state


def g_equation_residual(state: State, prev_state: State, grid: Grid) -> float:
    """L2 residual of (d_t + u d_x + v d_y - d_y^2) g - f d_x v + g d_x u.

    Transport is evaluated on prev_state and diffusion on state, matching
    the IMEX split.
    """
    dt = state.t - prev_state.t
    if not dt > 0:
        raise InvalidParameterError("prev_state", "must precede state in time")
    p = prev_state
    dg_dt = (state.g - p.g) / dt
    transport = p.u * spectral.dx(p.g) + p.v * dy(p.g, 1, grid)
    stretching = p.f * spectral.dx(p.v) - p.g * spectral.dx(p.u)
    residual = dg_dt + transport - dy(state.g, 2, grid) - stretching
    return weighted_l2(residual, 0.0, grid)
