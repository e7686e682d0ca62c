"""Exception hierarchy shared across the toolkit.

Every error raised by this package derives from SkgError so callers can
catch toolkit failures without also swallowing programming errors.
Subpackages define their own more specific errors on top of these.
"""

from __future__ import annotations


class SkgError(Exception):
    """Base class for all toolkit errors."""


class InvalidGraph(SkgError):
    """A graph failed structural validation where a valid one was required."""

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class GraphSyntaxError(SkgError):
    """A serialized document is not well-formed; carries byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class SchemaError(SkgError):
    """A document parsed but contains an unknown or ill-typed field; carries the field path."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path


class VersionError(SkgError):
    """A document declares a schema_version this build does not support."""


class CouplingMismatch(SkgError):
    """A node's stored coupling class disagrees with the taxonomy."""

    def __init__(self, message: str, node_ids=None):
        super().__init__(message)
        self.node_ids = list(node_ids or [])


class NotFound(SkgError):
    """A referenced record, case, graph, or task does not exist."""


class LengthMismatch(SkgError):
    """Paired sequences differ in length."""


class EmptyInput(SkgError):
    """An aggregate was requested over zero records."""
