"""
Verification suites behind `verify <suite>`
"""

from dataclasses import replace
from typing import Callable, Dict, List

import numpy as np
import structlog

from src.config.settings import RunConfig, get_settings
from src.core.dynamics import evolve
from src.core.errors import InvalidParameterError
from src.core.grid import build_grid
from src.core.state import make_initial_data
from src.verify.benches import (
    bench_boundary_identities,
    bench_cancellation,
    bench_commutator,
    bench_energy_inequality,
    bench_good_unknowns,
    bench_hardy,
    bench_trace,
    hardy_family,
)
from src.verify.heat_oracle import eigenmode_decay, heat_oracle_1d, neumann_eigenmode
from src.verify.mms import MmsCase, run_mms
from src.verify.report import VerificationReport

logger = structlog.get_logger(__name__)

ORACLE_NX = 4
EIGENMODE_TOLERANCE = 1e-6
TRACE_YMAX = 8.0


def suite_mms(config: RunConfig) -> List[VerificationReport]:
    case = MmsCase(c0=config.c0, delta=config.delta, amplitude=0.1)
    cfg = config.solver_config(tend=config.mms_tend)
    return [run_mms(case, config.mms_levels, cfg, ymax=config.mms_ymax, ell=config.ell, delta=config.delta,
                    max_workers=get_settings().max_workers)]


def suite_commutator(config: RunConfig) -> List[VerificationReport]:
    return [bench_commutator(config.commutator_sigma, config.commutator_resolutions, config.commutator_trials,
                             config.seed, max_workers=get_settings().max_workers)]


def suite_hardy(config: RunConfig) -> List[VerificationReport]:
    family = hardy_family(config.hardy_resolutions, nx=config.nx, ymax=config.ymax, ell=config.ell,
                          delta=config.delta, amp_f=config.amp_f)
    return [bench_hardy(family)]


def suite_energy(config: RunConfig) -> List[VerificationReport]:
    cfg = config.solver_config(tend=config.energy_tend)
    return [bench_energy_inequality(config.initial_data_spec(), config.energy_resolutions, cfg,
                                    ymax=config.ymax, ell=config.ell, max_workers=get_settings().max_workers)]


def suite_oracle_heat(config: RunConfig) -> List[VerificationReport]:
    """x-independent run against the Crank-Nicolson oracle, plus the oracle's own eigenmode check"""
    ny, dt, tend = config.oracle_ny, config.oracle_dt, config.oracle_tend
    grid = build_grid(ORACLE_NX, ny, config.ymax, config.ell, config.delta)
    spec = replace(config.initial_data_spec(), amp_u=0.0, amp_f=0.0)
    initial = make_initial_data(spec, grid)
    final = evolve(initial, config.solver_config(dt=dt, tend=tend), grid)

    oracle = heat_oracle_1d(initial.f[:, 0], dt, tend, ny, config.ymax)
    f_error = float(np.max(np.abs(final.f - oracle[:, None])))
    u_drift = float(np.max(np.abs(final.u - initial.u)))

    mode = neumann_eigenmode(ny, config.ymax)
    decayed = heat_oracle_1d(mode, dt, tend, ny, config.ymax)
    eigen_error = float(np.max(np.abs(decayed - eigenmode_decay(tend, config.ymax) * mode)))

    report = VerificationReport(name="oracle-heat", resolutions=[(ORACLE_NX, ny, dt)])
    report.measurements.append({"t": final.t, "f_error": f_error, "u_drift": u_drift, "eigenmode_error": eigen_error})
    report.tolerances.update({"f_error": config.oracle_tolerance, "u_drift": 1e-12,
                              "eigenmode_error": EIGENMODE_TOLERANCE})
    report.require(u_drift <= 1e-12, f"u drifted by {u_drift:.3e} on the x-independent manifold")
    report.require(f_error <= config.oracle_tolerance, f"solver and oracle differ by {f_error:.3e}")
    report.require(eigen_error <= EIGENMODE_TOLERANCE, f"oracle eigenmode decay off by {eigen_error:.3e}")
    return [report]


def suite_trace(config: RunConfig) -> List[VerificationReport]:
    grid = build_grid(16, 256, TRACE_YMAX, config.ell, config.delta)
    return [bench_trace(config.trace_trials, config.seed, grid)]


def suite_identities(config: RunConfig) -> List[VerificationReport]:
    spec = config.initial_data_spec()
    resolutions = config.identity_resolutions
    workers = get_settings().max_workers
    return [
        bench_cancellation(resolutions, spec, ell=config.ell),
        bench_good_unknowns(resolutions, spec, ell=config.ell),
        bench_boundary_identities(resolutions, replace(spec, amp_u=0.5 * spec.amp_u, amp_f=0.5 * spec.amp_f),
                                  ell=config.ell, max_workers=workers),
    ]


SUITES: Dict[str, Callable[[RunConfig], List[VerificationReport]]] = {
    "mms": suite_mms,
    "commutator": suite_commutator,
    "hardy": suite_hardy,
    "energy": suite_energy,
    "oracle-heat": suite_oracle_heat,
    "trace": suite_trace,
    "identities": suite_identities,
}


def resolve_suites(name: str) -> List[str]:
    if name == "all":
        return list(SUITES)
    if name not in SUITES:
        raise InvalidParameterError("suite", f"unknown suite '{name}'; choose from {', '.join([*SUITES, 'all'])}")
    return [name]


def run_suites(name: str, config: RunConfig) -> List[VerificationReport]:
    reports = []
    for suite in resolve_suites(name):
        logger.info("suite started", suite=suite)
        outcome = SUITES[suite](config)
        for report in outcome:
            logger.info("suite finished", suite=suite, report=report.name, status=report.status.value)
        reports.extend(outcome)
    return reports
