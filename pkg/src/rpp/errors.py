"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class RPPError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RPPError, ValueError):
    """An argument lies outside the range where the quantity is defined."""


class ConvergenceError(RPPError, ArithmeticError):
    """An iterative or adaptive procedure failed to reach its tolerance.

    ``bracket`` carries the last interval (or iterate pair) examined, when
    the procedure has one.
    """

    def __init__(self, message: str, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class SingularityError(RPPError, ArithmeticError):
    """A singular kernel was evaluated at (or numerically at) its pole."""


class GeometryError(RPPError, ValueError):
    """A sample window is too small for the requested evaluation."""


class RegimeError(RPPError, ValueError):
    """The requested exponential moment is infinite in this parameter regime."""
