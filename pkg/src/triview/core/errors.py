"""Exceptions raised by the triview library.

Everything derives from :class:`TriviewError`, so callers that only want to
know "the numerics refused this input" can catch one class.
"""


class TriviewError(Exception):
    """Base class for all triview errors."""


class InvalidInputError(TriviewError, ValueError):
    """Shapes, symmetry or argument ranges do not meet an operation's contract."""


class IllConditionedError(TriviewError):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, message: str, eigenvalue: float | None = None, view: str | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.view = view


class ZeroMatrixError(TriviewError):
    """Every singular value is below the absolute floor."""


class EmptyComplementError(TriviewError):
    """A basis already spans its ambient space."""


class InsufficientDataError(TriviewError):
    """Too few samples for the requested estimate."""


class SingularDesignError(TriviewError):
    """The regression design matrix is rank deficient and no ridge was given."""


class DegenerateModelError(TriviewError):
    """The embedded rotation R of the three-view fit is not full rank."""

    def __init__(self, message: str, margin: float):
        super().__init__(message)
        self.margin = margin


class ConfigError(TriviewError):
    """An experiment configuration is invalid."""
