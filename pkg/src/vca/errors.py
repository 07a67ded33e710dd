"""Exception hierarchy and structured warnings shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


class VcaError(Exception):
    """Base class for every error raised by the engine."""


class IngestError(VcaError):
    """Malformed input data (ragged CSV rows, undecodable bytes)."""


class ConfigError(VcaError):
    """Bad ingestion configuration, e.g. unknown role names or two measures."""


class CatalogError(VcaError):
    """Referenced table is not registered in the catalog."""


class PlanTypeError(VcaError):
    """A query plan references missing attributes or misuses a node."""


class OperandError(VcaError):
    """Operand extraction failed (unknown attribute, ambiguous cell, ...)."""


class MappingError(VcaError):
    """No visual channel is available for an attribute that needs one."""


class ClosureError(VcaError):
    """An operator that requires canonical inputs received a non-canonical view."""


class SafetyError(VcaError):
    """Composition rejected by the safety check; carries the verdict."""

    def __init__(self, message: str, verdict=None):
        super().__init__(message)
        self.verdict = verdict


class EmptyJoinError(VcaError):
    """Model composition matched zero rows."""


class EmptyModelError(VcaError):
    """Lift produced no usable per-group model."""


class UnsupportedNodeError(VcaError):
    """The SQL compiler met a plan node it cannot express."""


class ParseError(VcaError):
    """Script text did not match the grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class UnboundNameError(VcaError):
    """A script or API request referenced a name with no binding."""


@dataclass(frozen=True)
class Note:
    """Structured warning attached to views and safety verdicts."""

    code: str
    message: str

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message}


# warning codes used across modules
EMPTY_JOIN = "empty_join"
EMPTY_OPERAND = "empty_operand"
DEGENERATE_FIT = "degenerate_fit"
UNMATCHED_ROWS = "unmatched_rows"
DIVIDE_BY_ZERO = "divide_by_zero"
SHADOWED_NAME = "shadowed_name"
NON_CANONICAL = "non_canonical"
DROPPED_DIMS = "dropped_dims"
