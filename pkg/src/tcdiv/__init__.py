"""Capacity analysis of MIMO broadcast channels with transmit correlation
diversity: closed-form asymptotic bounds, Monte Carlo sum capacity via the
dual MAC, and pilot-overhead optimization."""

from . import (capacity_bounds, covariance, grouping, montecarlo, numerics,
               pilot_systems)
from .exceptions import (AccuracyError, DomainError, InfeasibleStructureError,
                         TcdivError, UnsupportedSizeError, ValidationError)

__version__ = "0.1.0"

__all__ = [
    "capacity_bounds", "covariance", "grouping", "montecarlo", "numerics",
    "pilot_systems", "AccuracyError", "DomainError",
    "InfeasibleStructureError", "TcdivError", "UnsupportedSizeError",
    "ValidationError",
]
