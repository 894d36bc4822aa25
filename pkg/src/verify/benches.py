"""
Randomized and refinement benches for the inequalities and identities
the energy estimate is built from.

Random draws come from numpy Generators seeded once per bench; tables
are drawn at the finest resolution and truncated for coarser ones, so
every resolution sees the same underlying functions.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from src.core import spectral
from src.core.diagnostics import (
    EPS0,
    EnergyReport,
    boundary_identity_b3,
    boundary_identity_b5,
    cancellation_residual,
    dissipation_D,
    energy_E,
    good_unknowns,
    hardy_quantities,
    inequality_ratio,
    trace_inequality_check,
    trace_inequality_check_f,
)
from src.core.dynamics import SolverConfig, evolve, min_envelope_ratio
from src.core.errors import InvalidParameterError, PositivityLostError
from src.core.grid import Grid, build_grid
from src.core.state import InitialDataSpec, State, make_initial_data
from src.verify.report import VerificationReport, fit_order, relative_variation

logger = structlog.get_logger(__name__)

RHO_MODES = 15


def _synthesize(cos_coeffs: np.ndarray, sin_coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    k = np.arange(len(cos_coeffs))[:, None]
    return cos_coeffs @ np.cos(k * x) + sin_coeffs @ np.sin(k * x)


def _decaying_table(rng: np.random.Generator, n_modes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unit-variance normals scaled by max(k, 1)^-2 for k = 0..n_modes"""
    k = np.arange(n_modes + 1, dtype=float)
    scale = np.maximum(k, 1.0) ** -2
    a = rng.standard_normal(n_modes + 1) * scale
    b = rng.standard_normal(n_modes + 1) * scale
    b[0] = 0.0
    return a, b


def commutator_ratio(rho: np.ndarray, w: np.ndarray, sigma: float) -> float:
    """||[|D|^sigma, rho] w|| / ((||rho||_inf + ||rho'||_inf) ||w||)"""
    numerator = float(spectral.l2_x_norm(spectral.commutator_multiplier(rho, w, sigma)))
    scale = (float(np.max(np.abs(rho))) + float(np.max(np.abs(spectral.dx(rho, 1))))) \
        * float(spectral.l2_x_norm(w))
    return numerator / scale if scale > EPS0 else 0.0


def bench_commutator(sigma: float = 0.5, resolutions: Sequence[int] = (64, 128, 256, 512), trials: int = 100,
                     seed: int = 0, rho_modes: int = RHO_MODES, growth_max: float = 1.25,
                     max_workers: Optional[int] = None) -> VerificationReport:
    """Max commutator ratio per Nx over seeded trials, and its growth from coarsest to finest.

    rho has rho_modes modes with k^-2 decay (rho_modes=0 gives constants);
    w has k^-2 decay up to Nx/2 - 1.
    """
    if not 0.0 < sigma < 1.0:
        raise InvalidParameterError("sigma", f"must lie in (0, 1), got {sigma}")
    if trials < 1:
        raise InvalidParameterError("trials", f"must be positive, got {trials}")
    resolutions = sorted(int(n) for n in resolutions)
    finest = resolutions[-1]
    rng = np.random.default_rng(seed)
    tables = [(_decaying_table(rng, rho_modes), _decaying_table(rng, finest // 2 - 1)) for _ in range(trials)]

    def measure(nx: int) -> Dict[str, float]:
        x = 2.0 * np.pi * np.arange(nx) / nx
        w_modes = nx // 2 - 1
        worst = 0.0
        for (ra, rb), (wa, wb) in tables:
            rho = _synthesize(ra, rb, x)
            w = _synthesize(wa[:w_modes + 1], wb[:w_modes + 1], x)
            worst = max(worst, commutator_ratio(rho, w, sigma))
        return {"nx": nx, "max_ratio": worst}

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(measure, resolutions))

    report = VerificationReport(name="commutator", resolutions=resolutions, measurements=rows)
    coarse, fine = rows[0]["max_ratio"], rows[-1]["max_ratio"]
    growth = fine / coarse if coarse > EPS0 else 1.0
    report.ratios["growth_factor"] = growth
    report.ratios["sigma"] = sigma
    report.tolerances["growth_max"] = growth_max
    report.require(growth <= growth_max, f"commutator ratio grew by {growth:.3f} > {growth_max}")
    return report


def hardy_family(resolutions: Sequence[int], nx: int = 16, ymax: float = 20.0, ell: float = 1.0,
                 delta: float = 2.0, amp_f: float = 0.1) -> List[Tuple[State, Grid]]:
    """f = (1 + amp_f cos x)<y>^-delta, u = 0, one state per ny"""
    spec = InitialDataSpec(c0=1.0, delta=delta, amp_u=0.0, amp_f=amp_f, mode=1)
    family = []
    for ny in resolutions:
        grid = build_grid(nx, ny, ymax, ell, delta)
        family.append((make_initial_data(spec, grid, eta=np.ones_like), grid))
    return family


def bench_hardy(states: Sequence[Tuple[State, Grid]], f_floor: float = 0.0,
                variation_max: float = 0.10) -> VerificationReport:
    """||<y>^(ell-1) d_x^3 g|| / ||<y>^ell psi|| per state.

    States whose g does not vanish at the wall break the inequality's
    hypothesis and are excluded; 0/0 states are flagged degenerate.
    """
    report = VerificationReport(name="hardy", resolutions=[grid.ny for _, grid in states])
    valid = []
    for state, grid in states:
        hq = hardy_quantities(state, grid, f_floor)
        scale = max(float(np.max(np.abs(state.g))), 1.0)
        excluded = hq.wall_g > 1e-12 * scale
        row = {"ny": grid.ny, "ratio": hq.ratio, "dx4f_over_psi": hq.followup_ratio,
               "degenerate": hq.degenerate, "excluded": excluded}
        report.measurements.append(row)
        if excluded:
            report.notes.append(f"ny={grid.ny}: g does not vanish at y=0, excluded")
        elif hq.degenerate:
            report.notes.append(f"ny={grid.ny}: 0/0, degenerate")
        else:
            valid.append(hq.ratio)

    report.tolerances["variation_max"] = variation_max
    if not valid:
        report.require(False, "no state satisfies the hypotheses")
        return report
    variation = relative_variation(valid) if len(valid) > 1 else 0.0
    report.ratios["variation"] = variation
    report.require(variation <= variation_max, f"Hardy ratio varies by {variation:.3f} > {variation_max}")
    return report


def _light_report(state: State, grid: Grid) -> EnergyReport:
    return EnergyReport(t=state.t, E=energy_E(state, grid), D=dissipation_D(state, grid),
                        min_env_ratio=min_envelope_ratio(state.f, state.delta, grid))


def _energy_run(spec: InitialDataSpec, nx: int, ny: int, cfg: SolverConfig, ymax: float, ell: float,
                delta: float) -> Dict[str, object]:
    grid = build_grid(nx, ny, ymax, ell, delta)
    history: List[EnergyReport] = []
    failure_time = float("nan")
    try:
        evolve(make_initial_data(spec, grid), cfg, grid,
               on_output=lambda n, state, prev: history.append(_light_report(state, grid)))
    except PositivityLostError as exc:
        failure_time = exc.t
        logger.warning("positivity lost during energy bench", nx=nx, ny=ny, t=exc.t)
    trace = inequality_ratio(history)
    return {
        "nx": nx, "ny": ny,
        "max_cstar": trace.max_value,
        "max_cstar_after_start": trace.max_after_start,
        "final_cstar": trace.final_value,
        "finite": bool(np.all(np.isfinite(trace.values))),
        "degenerate": trace.degenerate,
        "min_env_ratio": min(r.min_env_ratio for r in history) if history else float("nan"),
        "positivity_lost_at": failure_time,
        "t_reached": history[-1].t if history else 0.0,
    }


def bench_energy_inequality(spec: InitialDataSpec, resolutions: Sequence[Tuple[int, int]], cfg: SolverConfig,
                            ymax: float = 20.0, ell: float = 1.0, variation_max: float = 0.10,
                            envelope_fraction: float = 0.5, max_workers: Optional[int] = None) -> VerificationReport:
    """C*(t) trace per (nx, ny); a positivity loss is reported, not raised"""
    levels = [(int(nx), int(ny)) for nx, ny in resolutions]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(lambda lv: _energy_run(spec, lv[0], lv[1], cfg, ymax, ell, spec.delta), levels))

    report = VerificationReport(name="energy", resolutions=levels, measurements=rows)
    report.tolerances["variation_max"] = variation_max
    report.tolerances["envelope_fraction"] = envelope_fraction
    for row in rows:
        tag = f"(nx={row['nx']}, ny={row['ny']})"
        report.require(row["finite"], f"C* not finite {tag}")
        report.require(not np.isfinite(row["positivity_lost_at"]),
                       f"positivity lost at t={row['positivity_lost_at']:.4g} {tag}")
        report.require(row["min_env_ratio"] >= envelope_fraction * spec.c0,
                       f"min f<y>^delta = {row['min_env_ratio']:.4g} < {envelope_fraction} c0 {tag}")
    if len(rows) > 1:
        variation = relative_variation([r["final_cstar"] for r in rows])
        report.ratios["cstar_variation"] = variation
        report.require(np.isfinite(variation) and variation <= variation_max,
                       f"C*(tend) varies by {variation:.3f} > {variation_max}")
    return report


def random_smooth_velocity(rng: np.random.Generator, grid: Grid, x_modes: int = 4, y_powers: int = 4) -> np.ndarray:
    """Band-limited in x, sum of y^m e^(-2y) in y"""
    X, Y = grid.mesh()
    u = np.zeros(grid.shape)
    decay = np.exp(-2.0 * Y)
    for k in range(x_modes + 1):
        for m in range(y_powers):
            a, b = rng.standard_normal(2) / (1.0 + k) ** 2
            u += (a * np.cos(k * X) + b * np.sin(k * X)) * Y ** m * decay
    return u


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > EPS0 else 0.0


def bench_trace(trials: int = 50, seed: int = 0, grid: Optional[Grid] = None,
                slack: float = 0.05) -> VerificationReport:
    """Both trace chains on seeded random fields, each within slack.

    u: lhs <= rhs <= E for d_y^3 u.  f: lhs <= rhs <= D for d_y^4 f.
    """
    grid = grid or build_grid(16, 256, 8.0, 1.0, 2.0)
    rng = np.random.default_rng(seed)
    report = VerificationReport(name="trace", resolutions=[(grid.nx, grid.ny)])
    report.tolerances["slack"] = slack
    worst = {"lhs_over_rhs": 0.0, "rhs_over_E": 0.0, "lhs_f_over_rhs_f": 0.0, "rhs_f_over_D": 0.0}
    for trial in range(trials):
        u = random_smooth_velocity(rng, grid)
        f = random_smooth_velocity(rng, grid)
        state = State(t=0.0, u=u, f=f, v=grid.zeros(), g=grid.zeros(), c=1.0, delta=grid.delta)
        check = trace_inequality_check(state, grid)
        check_f = trace_inequality_check_f(state, grid)
        for key, value in (("lhs_over_rhs", _ratio(check.lhs, check.rhs)),
                           ("rhs_over_E", _ratio(check.rhs, check.reference)),
                           ("lhs_f_over_rhs_f", _ratio(check_f.lhs, check_f.rhs)),
                           ("rhs_f_over_D", _ratio(check_f.rhs, check_f.reference))):
            worst[key] = max(worst[key], value)
        report.measurements.append({"trial": trial, "lhs": check.lhs, "rhs": check.rhs, "E": check.reference,
                                    "lhs_f": check_f.lhs, "rhs_f": check_f.rhs, "D": check_f.reference})
    for key, value in worst.items():
        report.ratios[f"max_{key}"] = value
        report.require(value <= 1.0 + slack, f"trace ratio {key} reaches {value:.4f}")
    return report


def _default_states(spec: InitialDataSpec, resolutions: Sequence[int], nx: int, ymax: float,
                    ell: float) -> List[Tuple[State, Grid]]:
    out = []
    for ny in resolutions:
        grid = build_grid(nx, ny, ymax, ell, spec.delta)
        out.append((make_initial_data(spec, grid), grid))
    return out


def bench_cancellation(resolutions: Sequence[int] = (128, 256, 512), spec: Optional[InitialDataSpec] = None,
                       nx: int = 16, ymax: float = 20.0, ell: float = 1.0, order_min: float = 1.8,
                       finest_max: float = 1e-4) -> VerificationReport:
    """Cancellation residual on the default perturbed state as ny doubles"""
    spec = spec or InitialDataSpec()
    report = VerificationReport(name="cancellation", resolutions=list(resolutions))
    for state, grid in _default_states(spec, resolutions, nx, ymax, ell):
        report.measurements.append({"ny": grid.ny, "hy": grid.hy, "residual": cancellation_residual(state, grid)})
    order = fit_order([m["hy"] for m in report.measurements], [m["residual"] for m in report.measurements])
    finest = report.measurements[-1]["residual"]
    report.orders["cancellation"] = order
    report.tolerances.update({"order_min": order_min, "finest_max": finest_max})
    report.require(order >= order_min, f"cancellation residual order {order:.3f} < {order_min}")
    report.require(finest <= finest_max, f"cancellation residual {finest:.3e} > {finest_max:.1e} at finest ny")
    return report


def bench_good_unknowns(resolutions: Sequence[int] = (128, 256, 512), spec: Optional[InitialDataSpec] = None,
                        nx: int = 16, ymax: float = 10.0, ell: float = 1.0,
                        order_min: float = 1.8) -> VerificationReport:
    """Relative max discrepancy between the additive and product forms of psi"""
    spec = spec or InitialDataSpec()
    report = VerificationReport(name="good_unknowns", resolutions=list(resolutions))
    for state, grid in _default_states(spec, resolutions, nx, ymax, ell):
        gu = good_unknowns(state, grid)
        report.measurements.append({"ny": grid.ny, "hy": grid.hy, "discrepancy": gu.max_discrepancy})
    order = fit_order([m["hy"] for m in report.measurements], [m["discrepancy"] for m in report.measurements])
    report.orders["psi_identity"] = order
    report.tolerances["order_min"] = order_min
    report.require(order >= order_min, f"psi formula discrepancy order {order:.3f} < {order_min}")
    return report


def _identity_run(spec: InitialDataSpec, nx: int, ny: int, cfg: SolverConfig, ymax: float,
                  ell: float) -> Dict[str, float]:
    grid = build_grid(nx, ny, ymax, ell, spec.delta)
    final = evolve(make_initial_data(spec, grid), cfg, grid)
    return {"ny": ny, "hy": grid.hy, "dt": cfg.dt,
            "b3": boundary_identity_b3(final, grid), "b5": boundary_identity_b5(final, grid)}


def bench_boundary_identities(resolutions: Sequence[int] = (128, 256, 512), spec: Optional[InitialDataSpec] = None,
                              cfg: Optional[SolverConfig] = None, nx: int = 16, ymax: float = 10.0,
                              ell: float = 1.0, b3_order_min: float = 1.0,
                              max_workers: Optional[int] = None) -> VerificationReport:
    """b3/b5 residuals after a short evolution, with dt shrinking like hy^2.

    The x-independent run (same profile, zero amplitudes) is measured
    alongside; its residuals must decrease under refinement.
    """
    spec = spec or InitialDataSpec(amp_u=0.05, amp_f=0.05)
    cfg = cfg or SolverConfig(dt=1e-3, tend=0.02)
    resolutions = sorted(int(n) for n in resolutions)
    base = resolutions[0]
    flat = replace(spec, amp_u=0.0, amp_f=0.0)

    def run(job):
        case, ny = job
        level_cfg = replace(cfg, dt=cfg.dt * (base / ny) ** 2)
        row = _identity_run(case, nx, ny, level_cfg, ymax, ell)
        row["case"] = "perturbed" if case is spec else "x_independent"
        return row

    jobs = [(spec, ny) for ny in resolutions] + [(flat, ny) for ny in resolutions]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(run, jobs))

    report = VerificationReport(name="identities", resolutions=resolutions, measurements=rows)
    perturbed = [r for r in rows if r["case"] == "perturbed"]
    flat_rows = [r for r in rows if r["case"] == "x_independent"]
    hy = [r["hy"] for r in perturbed]
    b3_order = fit_order(hy, [r["b3"] for r in perturbed])
    b5_order = fit_order(hy, [r["b5"] for r in perturbed])
    report.orders.update({"b3": b3_order, "b5": b5_order})
    report.tolerances["b3_order_min"] = b3_order_min
    report.require(b3_order >= b3_order_min, f"b3 residual order {b3_order:.3f} < {b3_order_min}")
    report.require(perturbed[-1]["b5"] < perturbed[0]["b5"], "b5 residual does not decrease under refinement")
    for key in ("b3", "b5"):
        report.require(flat_rows[-1][key] <= flat_rows[0][key],
                       f"x-independent {key} residual does not decrease under refinement")
    return report
