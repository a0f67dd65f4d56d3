"""Exception taxonomy.

Three failure classes map onto the CLI exit codes: malformed input (2),
violated mathematical hypotheses (3), and numerical-tolerance failures (4).
"""

from __future__ import annotations


class SympjetError(Exception):
    """Base class for all package errors."""

    exit_code = 1

    def __init__(self, message: str, diagnostic: dict | None = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class SchemaError(SympjetError):
    """Input does not parse against the expected shape."""

    exit_code = 2


class PreconditionError(SympjetError):
    """A mathematical hypothesis of the requested operation fails."""

    exit_code = 3


class ToleranceError(SympjetError):
    """Computation finished but missed its numeric contract."""

    exit_code = 4
