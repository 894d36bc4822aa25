"""
Independent 1D oracle for the x-independent reduction d_t F = d_y^2 F

Crank-Nicolson on the second-order centered Laplacian, Neumann at y=0
through a mirrored ghost node, Dirichlet at Ymax. It deliberately
shares no code with the solver's implicit Euler step.
"""

import math
from typing import Optional

import numpy as np
import structlog
from scipy.linalg import solve_banded

from src.core.errors import InvalidParameterError

logger = structlog.get_logger(__name__)


def heat_oracle_1d(f0: np.ndarray, dt: float, tend: float, ny: int, ymax: float,
                   top: Optional[float] = None) -> np.ndarray:
    """Profile at tend on the nodes y_j = j*ymax/ny.

    top is the Dirichlet value at Ymax, defaulting to f0[-1]. Internal
    substeps keep dt <= dy^2, the range where Crank-Nicolson obeys the
    discrete maximum principle.
    """
    profile = np.asarray(f0, dtype=float)
    if profile.shape != (ny + 1,):
        raise InvalidParameterError("f0", f"expected {ny + 1} samples, got {profile.shape}")
    if not dt > 0:
        raise InvalidParameterError("dt", f"must be positive, got {dt}")
    if tend < 0:
        raise InvalidParameterError("tend", f"must be non-negative, got {tend}")
    if tend == 0:
        return profile.copy()

    hy = ymax / ny
    n_steps = max(1, math.ceil(tend / dt - 1e-9))
    n_sub = max(1, math.ceil((tend / n_steps) / (hy * hy)))
    tau = tend / (n_steps * n_sub)
    r = tau / (hy * hy)
    boundary = float(profile[-1]) if top is None else float(top)

    # unknowns are nodes 0..ny-1; node ny carries the Dirichlet value
    n = ny
    bands = np.zeros((3, n))
    bands[0, 1:] = -0.5 * r
    bands[1, :] = 1.0 + r
    bands[2, :-1] = -0.5 * r
    # mirrored ghost: row 0 couples to node 1 with weight 2
    bands[0, 1] = -r

    F = profile[:n].copy()
    for _ in range(n_steps * n_sub):
        rhs = (1.0 - r) * F
        rhs[1:] += 0.5 * r * F[:-1]
        rhs[:-1] += 0.5 * r * F[1:]
        rhs[0] += 0.5 * r * F[1]
        rhs[-1] += r * boundary
        F = solve_banded((1, 1), bands, rhs)

    logger.debug("heat oracle done", steps=n_steps * n_sub, tau=tau, ny=ny)
    return np.append(F, boundary)


def neumann_eigenmode(ny: int, ymax: float) -> np.ndarray:
    """cos(pi y / (2 Ymax)): zero slope at y=0 and zero value at Ymax"""
    y = ymax * np.arange(ny + 1) / ny
    return np.cos(0.5 * np.pi * y / ymax)


def eigenmode_decay(tend: float, ymax: float) -> float:
    """Exact decay factor exp(-(pi / (2 Ymax))^2 t) of the eigenmode"""
    return math.exp(-(0.5 * np.pi / ymax) ** 2 * tend)
