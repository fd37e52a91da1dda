"""Exception hierarchy shared by the simulation and analysis layers."""

from __future__ import annotations


class BlowupError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(BlowupError, ValueError):
    """Invalid grid, initial data or run configuration."""


class DomainError(BlowupError, ValueError):
    """Argument outside the domain of a formula (e.g. f <= 0, v0 >= 0)."""


class SingularEvaluationError(BlowupError, ArithmeticError):
    """A model denominator fell below the floor at some grid point."""

    def __init__(self, message: str, index: int | None = None, time: float | None = None):
        super().__init__(message)
        self.index = index
        self.time = time


class IntegrationDivergedError(BlowupError, ArithmeticError):
    """Non-finite values appeared in the evolved field."""


class InsufficientDataError(BlowupError, ValueError):
    """Too few samples for the requested estimate or fit."""


class FitError(BlowupError, ValueError):
    """A regression failed or landed outside its regime of validity.

    ``best`` carries the last iterate (or partial parameters) when available.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class BumpNotResolvedError(FitError):
    """Profile feature is too shallow compared to the grid-noise floor."""


class QuadratureError(BlowupError, ArithmeticError):
    """Adaptive quadrature failed to converge on some subinterval."""

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval
