"""Exception hierarchy."""


class EntmaxError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(EntmaxError, ValueError):
    """Operator shapes are inconsistent with the declared bipartition."""


class InvalidOperatorError(EntmaxError, ValueError):
    """An operator violates a required invariant (Hermiticity, positivity, trace)."""


class ConvergenceError(EntmaxError, ArithmeticError):
    """A numerical routine failed to converge.

    ``residual`` carries the last available residual, if any.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SolverError(EntmaxError):
    """The conic solver did not return an optimal solution."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class StateFileError(EntmaxError, ValueError):
    """A state file could not be parsed or violates its schema."""
