"""Exception types raised across the package."""


class SubmixError(Exception):
    """Base class for all package errors."""


class DomainError(SubmixError, ValueError):
    """An argument lies outside the domain of the operation."""


class TailUnderflowError(DomainError):
    """Survival has underflowed, so a ratio of vanishing quantities is undefined."""


class NonIdentifiableError(SubmixError):
    """The data cannot identify every model parameter (e.g. an empty cell)."""


class NotConvergedError(SubmixError):
    """The optimizer stopped before meeting its gradient tolerance."""


class SingularInformationError(SubmixError):
    """The observed information matrix could not be inverted."""


class BracketFailure(SubmixError):
    """A root could not be bracketed."""


class InvalidCorrelationError(DomainError):
    """A matrix is not a valid correlation matrix."""


class ZeroDenominatorError(SubmixError, ZeroDivisionError):
    """A relative-risk denominator is zero."""


class SchemaError(SubmixError, ValueError):
    """An input document does not match its expected schema."""
