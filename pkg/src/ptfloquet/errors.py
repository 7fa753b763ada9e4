"""Exception types raised by the library.

Each class maps to a distinct CLI exit code (see ``ptfloquet.cli``).
"""


class FloquetError(Exception):
    """Base class for all library errors."""


class NoUnbrokenPhaseError(FloquetError):
    """Even the smallest probed amplitude is in the broken phase."""


class BracketError(FloquetError):
    """A search interval does not bracket the sought transition."""


class DivergenceError(FloquetError, OverflowError):
    """Non-finite values appeared during propagation."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConstraintViolationError(FloquetError):
    """The drive does not satisfy Phi(t - T/2) = -Phi(t)."""


class UndefinedObservableError(FloquetError):
    """Observable requested for a zero-norm state."""


class InsufficientDataError(FloquetError):
    """Too few samples inside a fit window."""
