"""Exception hierarchy.

Every error is a ValueError so callers that only know about bad input keep
working; the CLI maps ConfigError to exit status 2 and other errors to 3.
"""

from typing import Sequence


class SpaneError(ValueError):
    """Base class for all toolkit errors."""


class ConfigError(SpaneError):
    """Invalid run configuration or command line."""


class DataError(SpaneError):
    """Invalid or inconsistent input data."""


class ManifestError(DataError):
    """A manifest line failed validation."""

    def __init__(self, message: str, lines: Sequence[int] = ()):
        self.lines = tuple(lines)
        if self.lines:
            where = ", ".join(str(n) for n in self.lines)
            message = f"line {where}: {message}"
        super().__init__(message)


class FormatError(DataError):
    """Malformed binary or audio file."""


class DimensionError(DataError):
    """Feature dimensions do not agree."""


class PolicyError(DataError):
    """No target candidate satisfies the selection policy."""


class InsufficientDataError(DataError):
    """Not enough samples, classes or rows for the requested computation."""
