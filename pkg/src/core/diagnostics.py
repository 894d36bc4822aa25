"""
Energy-method diagnostics

Weighted Sobolev norms, the energy E and dissipation D, the good
unknowns psi and phi that remove the lost tangential derivative, and
the wall trace identities an exact solution must satisfy. All of them
are pure functions of an immutable State.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.integrate import cumulative_trapezoid

from src.core import spectral
from src.core.dynamics import EPS0, g_equation_residual
from src.core.errors import InvalidParameterError, PositivityLostError
from src.core.grid import Grid, dy, weight_field, weighted_l2
from src.core.state import State, divergence_residuals

logger = structlog.get_logger(__name__)

MAX_SOBOLEV_ORDER = 4
TRACE_SLACK = 0.05

CSV_COLUMNS = [
    "t", "E", "D", "Cstar", "cancel_res", "b3_res", "b5_res",
    "div_u_res", "div_f_res", "g_eq_res", "min_env_ratio", "tail_mass",
]


@dataclass
class GoodUnknowns:
    """psi, phi in additive form, plus the product-form cross-check of psi"""
    psi: np.ndarray
    phi: np.ndarray
    psi_product: np.ndarray
    max_discrepancy: float


@dataclass
class EnergyReport:
    t: float
    E: float
    D: float
    norm_breakdown: Dict[str, float] = field(default_factory=dict)
    cstar: float = float("nan")
    cancel_residual: float = float("nan")
    b3_residual: float = float("nan")
    b5_residual: float = float("nan")
    div_u_residual: float = float("nan")
    div_f_residual: float = float("nan")
    g_eq_residual: float = float("nan")
    min_env_ratio: float = float("nan")
    tail_mass: float = float("nan")

    def to_row(self) -> Dict[str, float]:
        """Projection onto the timeseries.csv columns"""
        values = [
            self.t, self.E, self.D, self.cstar, self.cancel_residual, self.b3_residual, self.b5_residual,
            self.div_u_residual, self.div_f_residual, self.g_eq_residual, self.min_env_ratio, self.tail_mass,
        ]
        return dict(zip(CSV_COLUMNS, (float(v) for v in values)))


@dataclass
class InequalityTrace:
    """C*(t) over a run history"""
    t: np.ndarray
    values: np.ndarray
    degenerate: bool

    @property
    def max_value(self) -> float:
        return float(np.max(self.values)) if self.values.size else 0.0

    @property
    def final_value(self) -> float:
        return float(self.values[-1]) if self.values.size else float("nan")

    @property
    def max_after_start(self) -> float:
        """max of C* over t > t_0; C*(t_0) is 1 for every run"""
        later = self.values[self.t > self.t[0]] if self.values.size else self.values
        return float(np.max(later)) if later.size else float("nan")


@dataclass
class TraceCheck:
    lhs: float
    rhs: float
    reference: float

    @property
    def lhs_ok(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + TRACE_SLACK)

    @property
    def rhs_ok(self) -> bool:
        return self.rhs <= self.reference * (1.0 + TRACE_SLACK)

    @property
    def holds(self) -> bool:
        return self.lhs_ok and self.rhs_ok


def _dxi(values: np.ndarray, i: int) -> np.ndarray:
    return values if i == 0 else spectral.dx(values, i)


def _dyj(values: np.ndarray, j: int, grid: Grid) -> np.ndarray:
    return values if j == 0 else dy(values, j, grid)


def norm_table(values: np.ndarray, m: int, ell: float, grid: Grid, normal_shift: int = 0) -> Dict[Tuple[int, int], float]:
    """||<y>^(ell+j) d_x^i d_y^(j+normal_shift) values||^2 for every i + j <= m"""
    if not 0 <= m <= MAX_SOBOLEV_ORDER:
        raise InvalidParameterError("m", f"Sobolev order must be in 0..{MAX_SOBOLEV_ORDER}, got {m}")
    table = {}
    for j in range(m + 1):
        normal = _dyj(values, j + normal_shift, grid)
        for i in range(m - j + 1):
            table[(i, j)] = weighted_l2(_dxi(normal, i), ell + j, grid) ** 2
    return table


def sobolev_norm_sq(values: np.ndarray, m: int, ell: float, grid: Grid) -> float:
    """Squared H^m_ell norm"""
    return float(sum(norm_table(values, m, ell, grid).values()))


def energy_E(state: State, grid: Grid) -> float:
    return sobolev_norm_sq(state.u, 4, grid.ell, grid) + sobolev_norm_sq(state.f, 4, grid.ell, grid)


def dissipation_D(state: State, grid: Grid) -> float:
    """||d_y f||^2 in H^4_ell, built from normal derivatives of f up to order 5"""
    return float(sum(norm_table(state.f, 4, grid.ell, grid, normal_shift=1).values()))


def norm_breakdown(state: State, grid: Grid) -> Dict[str, float]:
    """Per-(i, j) contributions to E, keyed like 'u_dx2_dy1'"""
    breakdown = {}
    for name, values in (("u", state.u), ("f", state.f)):
        for (i, j), value in norm_table(values, 4, grid.ell, grid).items():
            breakdown[f"{name}_dx{i}_dy{j}"] = value
    return breakdown


def tangential_energy(state: State, grid: Grid) -> float:
    """The j = 0 part of E: pure tangential derivatives up to order 4"""
    total = 0.0
    for values in (state.u, state.f):
        for i in range(MAX_SOBOLEV_ORDER + 1):
            total += weighted_l2(_dxi(values, i), grid.ell, grid) ** 2
    return total


def normal_energy(state: State, grid: Grid) -> float:
    """The j >= 1 part of E"""
    total = 0.0
    for values in (state.u, state.f):
        total += sum(v for (i, j), v in norm_table(values, 4, grid.ell, grid).items() if j >= 1)
    return total


def _require_positive(state: State, grid: Grid, f_floor: float) -> None:
    ratio = state.f * weight_field(state.delta, grid)
    min_ratio = float(np.min(ratio))
    if min_ratio <= f_floor:
        raise PositivityLostError(state.t, min_ratio, f_floor)


def good_unknowns(state: State, grid: Grid, f_floor: float = 0.0) -> GoodUnknowns:
    """psi = d_x^4 f + (d_y f / f) d_x^3 g,  phi = d_x^4 u + (d_y u / f) d_x^3 g"""
    _require_positive(state, grid, f_floor)
    f = state.f
    dx3g = spectral.dx(state.g, 3)
    psi = spectral.dx(f, 4) + dy(f, 1, grid) / f * dx3g
    phi = spectral.dx(state.u, 4) + dy(state.u, 1, grid) / f * dx3g
    psi_product = -f * dy(dx3g / f, 1, grid)

    scale = max(float(np.max(np.abs(psi))), EPS0)
    discrepancy = float(np.max(np.abs(psi - psi_product))) / scale
    return GoodUnknowns(psi=psi, phi=phi, psi_product=psi_product, max_discrepancy=discrepancy)


def _inner(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    column = np.sum(a * b, axis=-1) * grid.hx
    return float(np.dot(grid.quad_weights, column))


def cancellation_residual(state: State, grid: Grid, f_floor: float = 0.0,
                          unknowns: Optional[GoodUnknowns] = None) -> float:
    """((f d_x + g d_y) W phi, W psi) + ((f d_x + g d_y) W psi, W phi), W = <y>^ell, made relative.

    On the truncated domain the pairing equals the flux of g W^2 psi phi
    through Ymax, which is subtracted; what remains is discretization error.
    """
    gu = unknowns if unknowns is not None else good_unknowns(state, grid, f_floor)
    w = weight_field(grid.ell, grid)
    wpsi = w * gu.psi
    wphi = w * gu.phi

    def transport(values):
        return state.f * spectral.dx(values) + state.g * dy(values, 1, grid)

    top_flux = float(np.sum(state.g[-1] * wpsi[-1] * wphi[-1]) * grid.hx)
    total = _inner(transport(wphi), wpsi, grid) + _inner(transport(wpsi), wphi, grid) - top_flux
    scale = weighted_l2(gu.psi, grid.ell, grid) * weighted_l2(gu.phi, grid.ell, grid) + EPS0
    return abs(total) / scale


def _wall(values: np.ndarray, order: int, grid: Grid) -> np.ndarray:
    return _dyj(values, order, grid)[0]


def boundary_identity_b3(state: State, grid: Grid) -> float:
    """d_y^3 f = 2 (d_y u) d_x f - f d_x d_y u at y = 0"""
    u, f = state.u, state.f
    uy = _wall(u, 1, grid)
    residual = _wall(f, 3, grid) - 2.0 * uy * spectral.dx(f[0]) + f[0] * spectral.dx(uy)
    return float(spectral.l2_x_norm(residual))


def boundary_identity_b5(state: State, grid: Grid) -> float:
    """Residual of the d_y^5 f trace expansion at y = 0"""
    u0, f0 = state.u[0], state.f[0]
    uy = _wall(state.u, 1, grid)
    uyyy = _wall(state.u, 3, grid)
    fyy = _wall(state.f, 2, grid)
    fyyy = _wall(state.f, 3, grid)
    dx = spectral.dx

    right = (
        u0 * dx(fyyy)
        - f0 * dx(uyyy)
        - 4.0 * dx(u0) * fyyy
        - 7.0 * dx(uy) * fyy
        + 4.0 * dx(f0) * uyyy
        + 8.0 * uy * dx(fyy)
        - u0 * dx(f0) * dx(uy)
        + u0 * f0 * dx(uy, 2)
        - 2.0 * u0 * uy * dx(f0, 2)
        + 2.0 * f0 * uy * dx(u0, 2)
    )
    return float(spectral.l2_x_norm(_wall(state.f, 5, grid) - right))


def inequality_ratio(history: Sequence[EnergyReport]) -> InequalityTrace:
    """C*(t) = (E(t) + int D) / (E(0) + int (E + E^2)), trapezoid in time"""
    if not history:
        return InequalityTrace(t=np.zeros(0), values=np.zeros(0), degenerate=True)
    t = np.array([r.t for r in history], dtype=float)
    E = np.array([r.E for r in history], dtype=float)
    D = np.array([r.D for r in history], dtype=float)

    int_D = cumulative_trapezoid(D, t, initial=0.0) if len(t) > 1 else np.zeros(1)
    int_E = cumulative_trapezoid(E + E * E, t, initial=0.0) if len(t) > 1 else np.zeros(1)
    numerator = E + int_D
    denominator = E[0] + int_E

    degenerate = bool(np.any(denominator <= EPS0))
    values = np.where(denominator > EPS0, numerator / np.maximum(denominator, EPS0), 0.0)
    return InequalityTrace(t=t, values=values, degenerate=degenerate)


def _half_trace_pair(normal: np.ndarray, next_normal: np.ndarray, grid: Grid) -> Tuple[float, float]:
    lhs = float(spectral.l2_x_norm(spectral.lambda_sigma(normal[0], 0.5)) ** 2)
    profile = spectral.l2_x_norm(spectral.lambda_sigma(normal, 1.0)) * spectral.l2_x_norm(next_normal)
    rhs = 2.0 * float(np.dot(grid.quad_weights, profile))
    return lhs, rhs


def trace_inequality_check(state: State, grid: Grid, energy: Optional[float] = None) -> TraceCheck:
    """||L^(1/2) d_y^3 u|_0||^2 against 2 int ||L d_y^3 u|| ||d_y^4 u|| dy, and that against E"""
    lhs, rhs = _half_trace_pair(dy(state.u, 3, grid), dy(state.u, 4, grid), grid)
    reference = energy_E(state, grid) if energy is None else energy
    return TraceCheck(lhs=lhs, rhs=rhs, reference=reference)


def trace_inequality_check_f(state: State, grid: Grid, dissipation: Optional[float] = None) -> TraceCheck:
    """Same chain for d_y^4 f, closed by the dissipation D"""
    lhs, rhs = _half_trace_pair(dy(state.f, 4, grid), dy(state.f, 5, grid), grid)
    reference = dissipation_D(state, grid) if dissipation is None else dissipation
    return TraceCheck(lhs=lhs, rhs=rhs, reference=reference)


def boundary_integral_bound(state: State, grid: Grid) -> Tuple[float, float]:
    """|int_T (d_y^4 f)(f d_x d_y^3 u)|_0 dx| and ||L^(1/2) d_y^3 u|_0|| ||L^(1/2)(f d_y^4 f)|_0||"""
    uyyy = _wall(state.u, 3, grid)
    fyyyy = _wall(state.f, 4, grid)
    f0 = state.f[0]
    integral = float(np.sum(fyyyy * f0 * spectral.dx(uyyy)) * grid.hx)
    bound = float(spectral.l2_x_norm(spectral.lambda_sigma(uyyy, 0.5))
                  * spectral.l2_x_norm(spectral.lambda_sigma(f0 * fyyyy, 0.5)))
    return abs(integral), bound


def good_unknown_energy(state: State, grid: Grid, f_floor: float = 0.0) -> float:
    gu = good_unknowns(state, grid, f_floor)
    return weighted_l2(gu.psi, grid.ell, grid) ** 2 + weighted_l2(gu.phi, grid.ell, grid) ** 2


def psi_neumann_residual(state: State, grid: Grid, f_floor: float = 0.0) -> float:
    """||d_y psi|_0||_{L2_x} relative to ||<y>^ell psi||"""
    gu = good_unknowns(state, grid, f_floor)
    wall = float(spectral.l2_x_norm(_wall(gu.psi, 1, grid)))
    return wall / (weighted_l2(gu.psi, grid.ell, grid) + EPS0)


@dataclass
class HardyQuantities:
    """||<y>^(ell-1) d_x^3 g||, ||<y>^ell psi|| and ||<y>^ell d_x^4 f||"""
    g_norm: float
    psi_norm: float
    dx4f_norm: float
    wall_g: float

    @property
    def degenerate(self) -> bool:
        return self.g_norm <= EPS0 and self.psi_norm <= EPS0

    @property
    def ratio(self) -> float:
        return self.g_norm / self.psi_norm if self.psi_norm > EPS0 else float("nan")

    @property
    def followup_ratio(self) -> float:
        return self.dx4f_norm / self.psi_norm if self.psi_norm > EPS0 else float("nan")


def hardy_quantities(state: State, grid: Grid, f_floor: float = 0.0) -> HardyQuantities:
    gu = good_unknowns(state, grid, f_floor)
    dx3g = spectral.dx(state.g, 3)
    return HardyQuantities(
        g_norm=weighted_l2(dx3g, grid.ell - 1.0, grid),
        psi_norm=weighted_l2(gu.psi, grid.ell, grid),
        dx4f_norm=weighted_l2(spectral.dx(state.f, 4), grid.ell, grid),
        wall_g=float(np.max(np.abs(state.g[0]))),
    )


def tail_mass(state: State, grid: Grid) -> float:
    """Weighted L2 mass of the upper envelope c^-1 <y>^-delta beyond Ymax"""
    if state.c <= 0:
        return float("inf")
    exponent = 2.0 * state.delta - 2.0 * grid.ell - 1.0
    return 2.0 * np.pi * state.c ** -2 * grid.ymax ** (-exponent) / exponent


def energy_report(state: State, grid: Grid, prev_state: Optional[State] = None,
                  history: Optional[List[EnergyReport]] = None, f_floor: float = 0.0) -> EnergyReport:
    """Every per-output diagnostic of a run; Cstar uses history plus this report"""
    breakdown = norm_breakdown(state, grid)
    E = float(sum(breakdown.values()))
    D = dissipation_D(state, grid)
    div_u, div_f = divergence_residuals(state, grid)
    report = EnergyReport(
        t=state.t,
        E=E,
        D=D,
        norm_breakdown=breakdown,
        cancel_residual=cancellation_residual(state, grid, f_floor),
        b3_residual=boundary_identity_b3(state, grid),
        b5_residual=boundary_identity_b5(state, grid),
        div_u_residual=div_u,
        div_f_residual=div_f,
        g_eq_residual=g_equation_residual(state, prev_state, grid) if prev_state is not None else 0.0,
        min_env_ratio=float(np.min(state.f * weight_field(state.delta, grid))),
        tail_mass=tail_mass(state, grid),
    )
    report.cstar = float(inequality_ratio(list(history or []) + [report]).values[-1])
    logger.debug("energy report", t=state.t, E=E, D=D, cstar=report.cstar)
    return report
