"""
Discrete geometry of the half-channel T x [0, Ymax]

Fields are numpy arrays of shape (Ny+1, Nx): row j holds the samples
along x at height y_j, so x-transforms act on the last axis and normal
stencils on the first.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_trapezoid

from src.core.errors import GridTooCoarseError, InvalidParameterError

MAX_DERIVATIVE_ORDER = 5
STENCIL_ACCURACY = 4

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class Grid:
    """Product grid with uniform spacing in both directions"""
    nx: int
    ny: int
    ymax: float
    ell: float
    delta: float
    x_nodes: np.ndarray
    y_nodes: np.ndarray
    quad_weights: np.ndarray

    @property
    def hx(self) -> float:
        return 2.0 * np.pi / self.nx

    @property
    def hy(self) -> float:
        return self.ymax / self.ny

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny + 1, self.nx)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """X, Y arrays in field layout"""
        X, Y = np.meshgrid(self.x_nodes, self.y_nodes)
        return X, Y

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


def build_grid(nx: int, ny: int, ymax: float, ell: float, delta: float) -> Grid:
    """Build the uniform grid, validating the exponent constraints of the envelope hypothesis"""
    if nx < 4 or nx & (nx - 1):
        raise InvalidParameterError("nx", f"must be a power of two >= 4, got {nx}")
    if ny < 16:
        raise InvalidParameterError("ny", f"must be >= 16, got {ny}")
    if not ymax > 0:
        raise InvalidParameterError("ymax", f"must be positive, got {ymax}")
    if not ell > 0.5:
        raise InvalidParameterError("ell", f"must exceed 1/2, got {ell}")
    if not delta > ell + 0.5:
        raise InvalidParameterError("delta", f"must exceed ell + 1/2 = {ell + 0.5}, got {delta}")

    x_nodes = 2.0 * np.pi * np.arange(nx) / nx
    y_nodes = ymax * np.arange(ny + 1) / ny
    y_nodes[-1] = ymax
    hy = ymax / ny
    quad_weights = np.full(ny + 1, hy)
    quad_weights[0] = quad_weights[-1] = 0.5 * hy

    return Grid(nx=nx, ny=ny, ymax=float(ymax), ell=float(ell), delta=float(delta),
                x_nodes=x_nodes, y_nodes=y_nodes, quad_weights=quad_weights)


def weight(y: ArrayLike, sigma: float) -> ArrayLike:
    """<y>^sigma = (1 + y^2)^(sigma/2)"""
    return (1.0 + np.square(y)) ** (0.5 * sigma)


def weight_field(sigma: float, grid: Grid) -> np.ndarray:
    """<y_j>^sigma as a column broadcastable against fields"""
    return weight(grid.y_nodes, sigma)[:, None]


def fornberg_weights(z: float, nodes: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..order at z on arbitrary nodes.

    Returns an array c of shape (order+1, len(nodes)); c[m] @ samples
    approximates the m-th derivative at z.
    """
    n = len(nodes)
    c = np.zeros((order + 1, n))
    c1 = 1.0
    c4 = nodes[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - z
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


@lru_cache(maxsize=64)
def derivative_matrix(ny: int, hy: float, order: int) -> sp.csr_matrix:
    """Sparse (Ny+1)x(Ny+1) matrix of 4th-order normal derivative stencils.

    Interior nodes use centered stencils of radius (order+1)//2 + 1;
    nodes closer than that radius to either end use a one-sided window
    of order+4 nodes.
    """
    n_nodes = ny + 1
    radius = (order + 1) // 2 + 1
    window = order + STENCIL_ACCURACY
    scale = hy ** (-order)

    rows, cols, vals = [], [], []
    centered = fornberg_weights(0.0, np.arange(-radius, radius + 1, dtype=float), order)[order]
    for i in range(n_nodes):
        if i < radius:
            first = 0
        elif i > ny - radius:
            first = n_nodes - window
        else:
            first = None
        if first is None:
            idx = np.arange(i - radius, i + radius + 1)
            w = centered
        else:
            idx = np.arange(first, first + window)
            w = fornberg_weights(float(i), idx.astype(float), order)[order]
        rows.extend([i] * len(idx))
        cols.extend(idx.tolist())
        vals.extend((w * scale).tolist())

    return sp.csr_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes))


def dy(field: np.ndarray, order: int, grid: Grid) -> np.ndarray:
    """Normal derivative of order 1..5 with 4th-order stencils (one-sided near the ends)"""
    if not 1 <= order <= MAX_DERIVATIVE_ORDER:
        raise InvalidParameterError("order", f"normal derivative order must be in 1..{MAX_DERIVATIVE_ORDER}")
    if grid.ny < 2 * order + 4:
        raise GridTooCoarseError(f"ny={grid.ny} too small for d^{order}/dy^{order}; need ny >= {2 * order + 4}")
    return np.asarray(derivative_matrix(grid.ny, grid.hy, order) @ field)


def upwind_dy(field: np.ndarray, speed: np.ndarray, grid: Grid,
              top_ghost: Optional[np.ndarray] = None) -> np.ndarray:
    """Second-order upwind normal derivative, selected per node by the sign of speed.

    top_ghost holds the two rows above Ymax (far-field data); by default
    the top row is continued as a constant. Near y=0 the backward stencil
    is replaced by the forward one at y_0 and by the centered one at y_1.
    """
    if top_ghost is None:
        top_ghost = np.repeat(field[-1:], 2, axis=0)
    q = np.concatenate([field, top_ghost], axis=0)
    h2 = 2.0 * grid.hy
    n = grid.ny + 1

    forward = (-3.0 * q[:n] + 4.0 * q[1:n + 1] - q[2:n + 2]) / h2
    backward = np.empty_like(forward)
    backward[2:] = (3.0 * q[2:n] - 4.0 * q[1:n - 1] + q[:n - 2]) / h2
    backward[0] = forward[0]
    backward[1] = (q[2] - q[0]) / h2

    return np.where(speed > 0.0, backward, forward)


def integrate_y_from_0(field: np.ndarray, grid: Grid) -> np.ndarray:
    """Cumulative trapezoidal antiderivative in y; the y_0 row is exactly zero"""
    return cumulative_trapezoid(field, dx=grid.hy, axis=0, initial=0.0)


def weighted_l2(field: np.ndarray, sigma: float, grid: Grid) -> float:
    """Discrete L2(Omega) norm of <y>^sigma * field (trapezoid in y, uniform sum in x)"""
    weighted = weight_field(sigma, grid) * field
    column_sums = np.sum(weighted * weighted, axis=-1) * grid.hx
    return float(np.sqrt(np.dot(grid.quad_weights, column_sums)))
