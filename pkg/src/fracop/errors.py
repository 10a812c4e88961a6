"""Exception hierarchy shared by all fracop modules."""

from __future__ import annotations


class FracopError(Exception):
    """Base class for every error raised by fracop."""


class DomainError(FracopError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class NearSingularError(FracopError, ArithmeticError):
    """A resolvent was requested too close to the spectrum."""


class UnsupportedOperatorError(FracopError, TypeError):
    """The operator lacks a capability (e.g. an eigendecomposition)."""


class ToleranceError(FracopError):
    """A requested accuracy could not be reached.

    The achieved error estimate is kept on the exception.
    """

    def __init__(self, message: str, achieved: float) -> None:
        super().__init__(message)
        self.achieved = achieved


class NonFiniteError(FracopError, FloatingPointError):
    """A non-finite value appeared in an integrand or input sample."""


class NonConvergenceError(FracopError):
    """An iteration hit its budget before reaching the tolerance."""

    def __init__(self, message: str, history: list[float]) -> None:
        super().__init__(message)
        self.history = list(history)


class BallViolationError(FracopError):
    """A Picard iterate left the ball on which the nonlinearity is controlled."""


class ContractionError(FracopError):
    """The observed Picard contraction ratio did not stay below one."""

    def __init__(self, message: str, ratios: list[float]) -> None:
        super().__init__(message)
        self.ratios = list(ratios)


class HypothesisError(FracopError, ValueError):
    """Input data violate a hypothesis required by a check (e.g. F(0) != 0)."""


class IllPosedError(FracopError):
    """An unregularized reconstruction was requested for a singular map."""
