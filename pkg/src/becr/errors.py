"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class BecrError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(BecrError, ValueError):
    """Input violates a documented precondition (shape, range, finiteness)."""


class InsufficientSamplesError(InvalidInputError):
    """Fewer samples than an estimator needs (e.g. covariance with N < 2)."""


class DegenerateSpectrumError(BecrError, ValueError):
    """Covariance is identically zero, so normalized eigenvalues are undefined."""


class ConvergenceError(BecrError, RuntimeError):
    """An iterative solver hit its iteration cap before converging."""


class UnsupportedFormatError(BecrError, ValueError):
    """Audio file uses a codec, bit depth or layout we do not decode."""


class WavParseError(BecrError, ValueError):
    """Audio file is malformed or truncated."""


class ConsistencyError(BecrError, RuntimeError):
    """Independent computation paths disagree beyond tolerance."""


class EmbeddingParseError(InvalidInputError):
    """Embedding CSV cell or row could not be parsed."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column
