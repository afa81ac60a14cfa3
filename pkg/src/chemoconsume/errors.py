"""Exception hierarchy shared by all modules."""


class ChemoError(Exception):
    """Base class for every error raised by this package."""


class InvalidDomainError(ChemoError, ValueError):
    """Grid construction received a non-positive cell count or extent."""


class DimensionError(ChemoError, ValueError):
    """A field does not live on the grid it was paired with."""


class ContractViolation(ChemoError, ValueError):
    """An operation's precondition on input values was not met."""


class SolverError(ChemoError, RuntimeError):
    """A linear solve failed to reach its tolerance.

    The :class:`~chemoconsume.elliptic.SolveReport` of the failed attempt is
    kept on ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PicardDivergenceError(ChemoError, RuntimeError):
    """The fixed-point iteration did not converge, even after step halving."""

    def __init__(self, message, residuals=(), step=None):
        super().__init__(message)
        self.residuals = list(residuals)
        self.step = step


class BoundViolationError(ChemoError, RuntimeError):
    """A computed state breached a pointwise bound beyond tolerance."""

    def __init__(self, message, quantity, index, magnitude):
        super().__init__(message)
        self.quantity = quantity
        self.index = index
        self.magnitude = magnitude


class ConfigError(ChemoError, ValueError):
    """Configuration text could not be parsed or failed validation."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line
