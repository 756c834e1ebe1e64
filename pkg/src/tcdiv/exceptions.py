"""Exception types shared across the package."""


class TcdivError(Exception):
    """Base class for errors raised by this package."""


class DomainError(TcdivError, ValueError):
    """An argument lies outside the domain of a formula."""


class UnsupportedSizeError(TcdivError, ValueError):
    """A brute-force routine was asked for a problem that is too large."""


class ValidationError(TcdivError, ValueError):
    """An input object violates its documented invariants."""


class InfeasibleStructureError(TcdivError, ValueError):
    """Requested group structure does not fit in the antenna dimension."""


class AccuracyError(TcdivError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    The best available estimate is kept in ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
