"""Exception types shared across the package."""


class MeanfieldError(Exception):
    """Base class for all package errors."""


class DomainError(MeanfieldError, ValueError):
    """An argument lies outside the mathematical domain of an operation
    (log of a nonpositive number, a density parameter out of range, a
    constrained value on or outside its support boundary, ...)."""


class ShapeError(MeanfieldError, ValueError):
    """A vector/array argument has the wrong length or a ragged layout."""


class ConfigurationError(MeanfieldError, ValueError):
    """A run was requested with inconsistent or unknown settings
    (unknown model name, missing dimension, invalid minibatch size, ...)."""


class EvaluationFailure(MeanfieldError, RuntimeError):
    """Model evaluations produced non-finite values persistently enough
    that the caller cannot proceed."""
