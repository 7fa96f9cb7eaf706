"""Exception types shared across the package.

Every error that can cross the CLI boundary has a distinct class so the
command layer can map it to a stable exit code.
"""

from __future__ import annotations


class EvshiftError(Exception):
    """Base class for all package errors."""


class ContractViolationError(EvshiftError):
    """An operation was called with arguments that violate its preconditions."""


class OutOfBoundsError(ContractViolationError):
    """An event lies outside the sensor geometry."""


class StreamOrderError(EvshiftError):
    """Event timestamps decreased where a time-ordered stream is required."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"out-of-order timestamp at stream index {index}")


class ParseError(EvshiftError):
    """A file could not be parsed; carries the 1-based offending line number."""

    def __init__(self, path: str, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class NumericalError(EvshiftError):
    """A linear-algebra step failed (singular innovation, non-finite values)."""


class EmptyAlignmentError(EvshiftError):
    """Estimated and ground-truth series share no usable time overlap."""
