"""Exception types shared across the package."""

from __future__ import annotations


class BrfError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(BrfError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFormatError(ParseError):
    """Input uses a feature this parser deliberately does not support."""


class ImputationError(BrfError):
    """A column cannot be imputed (for example, it is entirely missing)."""


class SchemaError(BrfError):
    """Data does not match the schema a model was trained on."""


class ModelFormatError(BrfError):
    """Model document is truncated, malformed, or has an unknown version."""
