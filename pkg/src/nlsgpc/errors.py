"""Exception hierarchy shared by the solver, estimator and CLI."""


class NlsGpcError(Exception):
    """Base class for all package errors."""


class ValidationError(NlsGpcError, ValueError):
    """An argument or configuration value violates a precondition."""


class ResolutionError(ValidationError):
    """The grid is too coarse for the requested soliton."""


class DomainError(ValidationError):
    """A closed-form expression was evaluated outside its domain."""


class NumericalError(NlsGpcError, ArithmeticError):
    """A numerical computation failed (blow-up, non-finite values, empty energy)."""


class BlowUpError(NumericalError):
    pass


class InconclusiveError(NumericalError):
    """The trapped/transmitted decision is ambiguous at the final time."""

    def __init__(self, message, fractions=None):
        super().__init__(message)
        self.fractions = fractions


class DetectionError(NumericalError):
    """No separation point could be located in the mean mode."""


class BracketError(NumericalError):
    """A velocity bracket does not straddle the trapped/transmitted transition."""


class WrapAroundWarning(RuntimeWarning):
    """Mass reached the periodic boundary and may re-enter from the other side."""
