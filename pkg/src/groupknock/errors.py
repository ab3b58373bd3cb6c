"""Exception types shared across the package.

Numerical failures (NotPositiveDefinite, NonConvergence, NumericalDivergence)
signal that a computation cannot proceed on the given input; data problems
(DegenerateInput, ParseError, ...) signal bad user input. The CLI maps the two
families to different exit codes.
"""


class GroupKnockError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefinite(GroupKnockError):
    """A matrix required to be positive definite failed its factorization."""


class NonConvergence(GroupKnockError):
    """An iterative solver exhausted its iteration budget."""


class DegenerateCovariance(GroupKnockError):
    """Covariance too close to singular for a usable knockoff construction."""


class DegenerateInput(GroupKnockError):
    """Input data is degenerate (e.g. a constant column)."""


class DimensionMismatch(GroupKnockError):
    """Array shapes are inconsistent with each other or with the partition."""


class NumericalDivergence(GroupKnockError):
    """Training loss became non-finite."""


class InvalidLevel(GroupKnockError):
    """Target FDR level outside [0, 1]."""


class InvalidCounts(GroupKnockError):
    """Inconsistent counts passed to a combinatorial probability."""


class EmptyInput(GroupKnockError):
    """An aggregate was requested over an empty collection."""


class ParseError(GroupKnockError):
    """A data or config file could not be parsed; message carries location."""
