"""
Exception hierarchy for the boundary-layer solver
"""

from typing import Optional


class MhdBoundaryLayerError(Exception):
    """Base class for every error raised by the solver and its diagnostics"""


class InvalidParameterError(MhdBoundaryLayerError, ValueError):
    """A configuration value violates a documented constraint"""

    def __init__(self, parameter: str, message: str):
        self.parameter = parameter
        super().__init__(f"{parameter}: {message}")


class GridTooCoarseError(MhdBoundaryLayerError):
    """The normal grid has too few nodes for the requested stencil"""


class EnvelopeViolationError(MhdBoundaryLayerError):
    """Generated data does not satisfy f >= c<y>^-delta with the required margin"""


class SingularSolveError(MhdBoundaryLayerError):
    """The implicit diffusion matrix could not be factorized"""


class SolverAbort(MhdBoundaryLayerError):
    """An evolution step refused to continue; carries the time of the abort"""

    def __init__(self, message: str, t: float):
        self.t = t
        super().__init__(f"{message} (t={t:.6g})")


class PositivityLostError(SolverAbort):
    """f<y>^delta fell below the admissible floor somewhere on the grid"""

    def __init__(self, t: float, min_ratio: float, floor: Optional[float] = None):
        self.min_ratio = min_ratio
        self.floor = floor
        detail = f"min f<y>^delta = {min_ratio:.6g}"
        if floor is not None:
            detail += f" < floor {floor:.6g}"
        super().__init__(f"positivity lost: {detail}", t)


class CflCollapseError(SolverAbort):
    """The CFL-limited step dropped below the minimum admissible dt"""

    def __init__(self, t: float, dt: float):
        self.dt = dt
        super().__init__(f"CFL collapse: required dt = {dt:.3e}", t)


class NonFiniteError(SolverAbort):
    """NaN or Inf appeared in a prognostic field"""

    def __init__(self, t: float, field_name: str):
        self.field_name = field_name
        super().__init__(f"non-finite values in {field_name}", t)
