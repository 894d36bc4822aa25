"""
Unknowns of the boundary-layer system: prognostic (u, f), derived (v, g)

(v, g) are always recomputed from (u, f) through the divergence-free
constraint and the wall condition v = g = 0; the g equation is only
checked as a residual. No boundary condition is imposed on u at the
wall (there is no viscosity).
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
import structlog

from src.core import spectral
from src.core.errors import EnvelopeViolationError, InvalidParameterError
from src.core.grid import Grid, dy, integrate_y_from_0, weight_field, weighted_l2

logger = structlog.get_logger(__name__)

ENVELOPE_MARGIN = 0.9


@dataclass(frozen=True, eq=False)
class State:
    """Immutable snapshot of the system at time t"""
    t: float
    u: np.ndarray
    f: np.ndarray
    v: np.ndarray
    g: np.ndarray
    c: float
    delta: float
    consistent: bool = True

    def replace_fields(self, grid: Grid, *, u: Optional[np.ndarray] = None, f: Optional[np.ndarray] = None,
                       t: Optional[float] = None) -> "State":
        """New snapshot with updated prognostic fields and freshly reconstructed (v, g)"""
        new_u = self.u if u is None else u
        new_f = self.f if f is None else f
        v, g = reconstruct(new_u, new_f, grid)
        return replace(self, t=self.t if t is None else t, u=new_u, f=new_f, v=v, g=g, consistent=True)


@dataclass(frozen=True)
class InitialDataSpec:
    """Parameters of the perturbed shear initial data"""
    c0: float = 1.0
    delta: float = 2.0
    amp_u: float = 0.1
    amp_f: float = 0.1
    mode: int = 1


@dataclass
class EnvelopeReport:
    """Extremal ratios against the envelope c<y>^-delta"""
    min_ratio: float
    max_ratio: float
    max_ratio_dy1: float
    max_ratio_dy2: float
    c: float
    lower_ok: bool
    upper_ok: bool
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok

    @property
    def admissible_c(self) -> float:
        """Largest constant for which both envelope bounds hold"""
        upper = max(self.max_ratio, self.max_ratio_dy1, self.max_ratio_dy2)
        if upper <= 0:
            return self.min_ratio
        return min(self.min_ratio, 1.0 / upper)


def reconstruct(u: np.ndarray, f: np.ndarray, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """v = -int_0^y d_x u, g = -int_0^y d_x f; first rows exactly zero"""
    v = -integrate_y_from_0(spectral.dx(u, 1), grid)
    g = -integrate_y_from_0(spectral.dx(f, 1), grid)
    return v, g


def envelope_ratios(f: np.ndarray, delta: float, grid: Grid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """f<y>^delta, |d_y f|<y>^(delta+1), |d_y^2 f|<y>^(delta+2)"""
    r0 = f * weight_field(delta, grid)
    r1 = np.abs(dy(f, 1, grid)) * weight_field(delta + 1, grid)
    r2 = np.abs(dy(f, 2, grid)) * weight_field(delta + 2, grid)
    return r0, r1, r2


def check_envelope(state: State, grid: Grid) -> EnvelopeReport:
    """Scan every node against f >= c<y>^-delta and |d_y^j f| <= c^-1 <y>^(-delta-j)"""
    r0, r1, r2 = envelope_ratios(state.f, state.delta, grid)
    min_ratio = float(np.min(r0))
    max_ratio = float(np.max(np.abs(r0)))
    max1 = float(np.max(r1))
    max2 = float(np.max(r2))
    c = state.c
    lower_ok = c > 0 and min_ratio >= c
    upper_ok = c > 0 and max(max_ratio, max1, max2) <= 1.0 / c
    j_min, i_min = np.unravel_index(np.argmin(r0), r0.shape)
    return EnvelopeReport(
        min_ratio=min_ratio, max_ratio=max_ratio, max_ratio_dy1=max1, max_ratio_dy2=max2,
        c=c, lower_ok=bool(lower_ok), upper_ok=bool(upper_ok),
        details={"argmin_y": float(grid.y_nodes[j_min]), "argmin_x": float(grid.x_nodes[i_min])},
    )


def default_eta(y: np.ndarray) -> np.ndarray:
    """Perturbation envelope e^{-y^2}: even, so eta'(0) = 0"""
    return np.exp(-y * y)


def make_initial_data(spec: InitialDataSpec, grid: Grid,
                      eta: Callable[[np.ndarray], np.ndarray] = default_eta) -> State:
    """Perturbed shear data f0 = c0(1 + a_f cos(kx) eta(y))<y>^-delta, u0 = a_u sin(kx) y^2 e^-y"""
    if spec.c0 < 0:
        raise InvalidParameterError("c0", f"must be non-negative, got {spec.c0}")
    if spec.mode < 0 or spec.mode > grid.nx // 3:
        raise InvalidParameterError("mode", f"must lie in 0..{grid.nx // 3} to stay inside the dealiased band")
    if abs(spec.delta - grid.delta) > 1e-14:
        raise InvalidParameterError("delta", f"initial data delta={spec.delta} differs from grid delta={grid.delta}")

    X, Y = grid.mesh()
    f0 = spec.c0 * (1.0 + spec.amp_f * np.cos(spec.mode * X) * eta(Y)) * (1.0 + Y * Y) ** (-0.5 * spec.delta)
    u0 = spec.amp_u * np.sin(spec.mode * X) * Y * Y * np.exp(-Y)
    state = state_with_envelope(u0, f0, spec.delta, grid)
    logger.debug("initial data built", c=state.c, mode=spec.mode)
    return state


def state_with_envelope(u: np.ndarray, f: np.ndarray, delta: float, grid: Grid, t: float = 0.0) -> State:
    """Reconstructed state whose envelope constant is 90% of the largest admissible one"""
    candidate = State(t=t, u=u, f=f, v=grid.zeros(), g=grid.zeros(), c=1.0, delta=delta)
    report = check_envelope(candidate, grid)
    if report.min_ratio <= 0.0:
        raise EnvelopeViolationError(
            f"f is not positive: min f<y>^delta = {report.min_ratio:.4g} "
            f"at (x={report.details['argmin_x']:.3g}, y={report.details['argmin_y']:.3g}); reduce amp_f"
        )
    v, g = reconstruct(u, f, grid)
    return State(t=t, u=u, f=f, v=v, g=g, c=ENVELOPE_MARGIN * report.admissible_c, delta=delta)


def neumann_residual(state: State, grid: Grid) -> float:
    """max |d_y f| on the wall row"""
    return float(np.max(np.abs(dy(state.f, 1, grid)[0])))


def divergence_residuals(state: State, grid: Grid) -> Tuple[float, float]:
    """Discrete L2 norms of d_x u + d_y v and d_x f + d_y g"""
    div_u = spectral.dx(state.u, 1) + dy(state.v, 1, grid)
    div_f = spectral.dx(state.f, 1) + dy(state.g, 1, grid)
    return weighted_l2(div_u, 0.0, grid), weighted_l2(div_f, 0.0, grid)
