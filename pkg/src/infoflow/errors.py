"""Exception hierarchy shared across the package.

Errors that cross the HTTP boundary carry enough context (resource ids,
positions, status codes) for the server to map them onto wire error codes.
"""

from __future__ import annotations


class InfoflowError(Exception):
    """Base class for all package errors."""


class ParseError(InfoflowError):
    """Malformed input document or expression."""

    def __init__(self, message: str, *, source: str | None = None, position: int | None = None):
        self.source = source
        self.position = position
        prefix = f"{source}: " if source else ""
        suffix = f" (at position {position})" if position is not None else ""
        super().__init__(f"{prefix}{message}{suffix}")


class DecodeError(InfoflowError):
    """Wire document or fetched payload does not match the expected grammar."""


class ValidationError(InfoflowError):
    """One or more service-definition violations; aggregates them all."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class SourceUnavailable(InfoflowError):
    """Back-end resource could not be reached or read."""

    def __init__(self, message: str, *, resource_id: str | None = None, status: int | None = None):
        self.resource_id = resource_id
        self.status = status
        super().__init__(message)


class SchemaMismatch(InfoflowError):
    """Fetched data does not have the columns the rule expects."""


class MissingParam(InfoflowError):
    """A required key parameter (or template placeholder) was not supplied."""


class MissingElement(InfoflowError):
    """An expression referenced an element absent from the row."""


class EvalError(InfoflowError):
    """Transform evaluation failed (type mismatch, division by zero)."""


class AmbiguousEnrichment(InfoflowError):
    """An enrichment source returned more than one row for a single key."""

    def __init__(self, resource_id: str, key: str):
        self.resource_id = resource_id
        self.key = key
        super().__init__(f"enrichment source {resource_id!r} returned multiple rows for key {key!r}")


class UpdateUnsupported(InfoflowError):
    """Update attempted against a resource or service that cannot accept it."""


class NoSuchKey(InfoflowError):
    """An update row matched zero source rows; the whole batch was rejected."""
