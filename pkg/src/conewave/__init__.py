"""Waves on product cones: resonances, mode solvers, radiation fields and broken rays."""

from __future__ import annotations

from . import bichar, geometry, radiation, solver, spectrum
from .errors import (
    ConditioningError,
    ConewaveError,
    ConfigError,
    ContractViolation,
    ConvergenceError,
    DomainError,
    FlowError,
    NumericError,
    QuadratureError,
    UnsupportedError,
)

__version__ = "0.1.0"

__all__ = [
    "bichar", "geometry", "radiation", "solver", "spectrum",
    "ConewaveError", "DomainError", "ConfigError", "UnsupportedError", "NumericError",
    "QuadratureError", "ConvergenceError", "ConditioningError", "FlowError", "ContractViolation",
]
