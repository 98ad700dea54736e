"""Exception types raised by frechet_variations.

Value-like failures also derive from ``ValueError`` so callers that validate
inputs the usual way keep working.
"""

from __future__ import annotations

from typing import FrozenSet, Optional


class VariationalError(Exception):
    """Base class for every error raised by the engine."""


class PreconditionError(VariationalError, ValueError):
    """An operation was called outside its documented preconditions."""


class UnsupportedOrderError(PreconditionError):
    """A seminorm or stencil order outside the supported range was requested."""


class SupportViolationError(PreconditionError):
    """A variation field does not vanish near both interval endpoints."""


class InsufficientDataError(PreconditionError):
    """Too few refinement levels were supplied to fit a convergence order."""


class DimensionError(VariationalError, ValueError):
    """Operands live on different grids or time grids."""


class UnsupportedFormError(VariationalError, ValueError):
    """The Lagrangian does not have the form a solver requires."""


class EvaluationError(VariationalError, ArithmeticError):
    """A Lagrangian evaluation produced a non-finite value."""

    def __init__(
        self, message: str, point: object = None, time: Optional[float] = None
    ) -> None:
        if time is not None:
            message = f"{message} (at t={time:.17g})"
        super().__init__(message)
        self.point = point
        self.time = time


class DivergenceError(VariationalError, RuntimeError):
    """Time stepping left the representable range."""

    def __init__(self, message: str, step: int) -> None:
        super().__init__(f"{message} at step {step}")
        self.step = step


class ConfigurationError(VariationalError, ValueError):
    """A run configuration failed validation; ``field`` names the culprit."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class DensitySyntaxError(VariationalError, ValueError):
    """An expression could not be parsed."""

    def __init__(
        self, message: str, position: int, expected: FrozenSet[str] = frozenset()
    ) -> None:
        detail = f"{message} at position {position}"
        if expected:
            detail += f"; expected one of: {', '.join(sorted(expected))}"
        super().__init__(detail)
        self.position = position
        self.expected = expected


class UnknownIdentifierError(DensitySyntaxError):
    """An expression referenced a name outside the declared variables."""

    def __init__(self, name: str, position: int, allowed: FrozenSet[str]) -> None:
        super().__init__(f"unknown identifier '{name}'", position, allowed)
        self.name = name
