"""Exception and warning types shared across the package."""


class EnclosureError(Exception):
    """Base class for errors raised by this package."""


class DomainError(EnclosureError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(EnclosureError, ArithmeticError):
    """A series or iterative procedure failed to converge within its budget."""


class ExponentOverflowError(EnclosureError, OverflowError):
    """An exponential would leave the representable floating-point range."""


class IllConditionedError(EnclosureError):
    """A linear system or least-squares fit is numerically rank deficient."""


class InsufficientDataError(EnclosureError):
    """Too few valid samples to carry out a fit or reconstruction."""


class EnclosureWarning(UserWarning):
    """Non-fatal condition that may compromise a reconstruction."""
