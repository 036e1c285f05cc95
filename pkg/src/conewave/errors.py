"""Exception hierarchy shared by all conewave modules.

Every error raised on purpose by the library derives from
:class:`ConewaveError`, so callers (the CLI in particular) can map
failures onto exit codes without catching unrelated exceptions.
"""

from __future__ import annotations

__all__ = [
    "ConewaveError",
    "DomainError",
    "ConfigError",
    "UnsupportedError",
    "NumericError",
    "QuadratureError",
    "ConvergenceError",
    "ConditioningError",
    "FlowError",
    "ContractViolation",
]


class ConewaveError(Exception):
    """Base class for all library errors."""


class DomainError(ConewaveError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(ConewaveError, ValueError):
    """A run configuration is invalid (bad schema, unstable step sizes, ...)."""


class UnsupportedError(ConewaveError):
    """The requested combination of inputs is deliberately not supported."""


class NumericError(ConewaveError, ArithmeticError):
    """A numerical stage failed; ``diagnostics`` carries the details."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class QuadratureError(NumericError):
    """A quadrature did not reach its error tolerance."""


class ConvergenceError(NumericError):
    """An integral or iteration failed to converge."""


class ConditioningError(NumericError):
    """A least-squares system is too ill-conditioned to trust."""


class FlowError(NumericError):
    """The bicharacteristic integrator could not continue."""


class ContractViolation(ConewaveError):
    """An input violates a structural contract of an operation."""
