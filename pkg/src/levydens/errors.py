"""Exception hierarchy shared by all levydens modules."""


class LevyDensError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LevyDensError, ValueError):
    """An argument lies outside the domain of the function."""


class SingularityError(LevyDensError, ValueError):
    """Evaluation requested at a point where the quantity is singular."""


class BranchError(LevyDensError, ArithmeticError):
    """The complex-log recursion left the right half-plane."""


class NoConvergence(LevyDensError, ArithmeticError):
    """A period sum or series did not reach its tolerance.

    The partial result is kept on the exception so callers can still
    report it.
    """

    def __init__(self, message, value=float("nan"), err_est=float("inf"), k_used=0):
        super().__init__(message)
        self.value = value
        self.err_est = err_est
        self.k_used = k_used


class ToleranceNotMet(LevyDensError, ArithmeticError):
    """Plain quadrature failed to stabilise under range doubling."""

    def __init__(self, message, values=()):
        super().__init__(message)
        self.values = tuple(values)


class Divergence(LevyDensError, ArithmeticError):
    """A panel sum over a semi-infinite range failed to contract."""


class InsufficientCoverage(LevyDensError, ValueError):
    """Too few samples in one of the fitting regimes."""


class NotSymmetric(LevyDensError, ValueError):
    """A check that needs a real, even symbol received a complex one."""


class GridTooCoarse(LevyDensError, ArithmeticError):
    """A grid-based quadrature error estimate exceeded its tolerance."""
