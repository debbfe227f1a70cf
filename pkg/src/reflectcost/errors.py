"""Exception types shared across the package."""


class PoleError(ValueError):
    """Evaluation requested at (or past) a pole of the drift / tan ratio."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SolverError(RuntimeError):
    """Optimal-transport solver failure."""


class IterationCapError(SolverError):
    """Simplex iteration cap hit; usually signals degenerate input."""
