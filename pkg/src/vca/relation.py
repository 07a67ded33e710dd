"""Typed in-memory relations with bag semantics, plus CSV ingestion.

Values are plain Python objects: None (Null), int/float (numeric), str
(categorical) and datetime.date (temporal). Relations are immutable; all
mutation happens by building new ones.
"""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import CatalogError, ConfigError, IngestError

Value = object  # None | bool | int | float | str | datetime.date


class Role(str, Enum):
    DIMENSION = "dimension"
    MEASURE = "measure"


class Kind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEMPORAL = "temporal"


_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True)
class AttributeDef:
    name: str
    role: Role
    kind: Kind


@dataclass(frozen=True)
class Schema:
    attrs: tuple[AttributeDef, ...]

    def __post_init__(self):
        names = [a.name for a in self.attrs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate attribute names in schema: {names}")

    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attrs)

    def index(self, name: str) -> int:
        for i, a in enumerate(self.attrs):
            if a.name == name:
                return i
        raise KeyError(name)

    def attr(self, name: str) -> AttributeDef:
        return self.attrs[self.index(name)]

    def has(self, name: str) -> bool:
        return any(a.name == name for a in self.attrs)

    def dimensions(self) -> tuple[AttributeDef, ...]:
        return tuple(a for a in self.attrs if a.role is Role.DIMENSION)

    def measures(self) -> tuple[AttributeDef, ...]:
        return tuple(a for a in self.attrs if a.role is Role.MEASURE)


def _conforms(value: Value, kind: Kind) -> bool:
    if value is None:
        return True
    if kind is Kind.NUMERIC:
        return isinstance(value, (int, float))  # bool passes as a degenerate int
    if kind is Kind.TEMPORAL:
        return isinstance(value, date)
    return isinstance(value, str)


@dataclass(frozen=True)
class Relation:
    """An ordered bag of rows. Row order is incidental, never semantic."""

    schema: Schema
    rows: tuple[tuple, ...]

    def __post_init__(self):
        width = len(self.schema.attrs)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} values, schema has {width}")
            for a, v in zip(self.schema.attrs, row):
                if not _conforms(v, a.kind):
                    raise ValueError(f"row {i}: value {v!r} does not conform to {a.kind.value} attribute {a.name!r}")

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> tuple:
        i = self.schema.index(name)
        return tuple(row[i] for row in self.rows)

    def records(self) -> list[dict]:
        names = self.schema.names()
        return [dict(zip(names, row)) for row in self.rows]


def _parse_cell(text: str) -> Value:
    if text == "":
        return None
    if _INT_RE.match(text):
        return int(text)
    if _FLOAT_RE.match(text):
        return float(text)
    if _DATE_RE.match(text):
        try:
            return date.fromisoformat(text)
        except ValueError:
            return text
    return text


def _infer_kind(cells: Sequence[Value]) -> Kind:
    present = [c for c in cells if c is not None]
    if present and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in present):
        return Kind.NUMERIC
    if present and all(isinstance(c, date) for c in present):
        return Kind.TEMPORAL
    return Kind.CATEGORICAL


def ingest_csv(source, roles: Mapping[str, Role | str]) -> Relation:
    """Read an RFC-4180 CSV (header row required) into a typed relation.

    `source` is a path, or CSV text if the string contains a newline.
    `roles` assigns dimension/measure per column; unlisted columns default
    to dimension. A column is numeric if every non-empty cell parses as a
    number, temporal if every non-empty cell is an ISO-8601 date, else
    categorical. Empty cells become Null.
    """
    if isinstance(source, str) and "\n" in source:
        text = source
    elif isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("CSV has no header row")
    if len(set(header)) != len(header):
        raise IngestError(f"duplicate column names in header: {header}")

    parsed_roles: dict[str, Role] = {}
    for col, role in roles.items():
        if col not in header:
            raise ConfigError(f"role given for unknown column {col!r}")
        try:
            parsed_roles[col] = Role(role)
        except ValueError:
            raise ConfigError(f"unknown role {role!r} for column {col!r}")
    measures = [c for c, r in parsed_roles.items() if r is Role.MEASURE]
    if len(measures) > 1:
        raise ConfigError(f"at most one measure column per table, got {measures}")

    raw_rows: list[list[Value]] = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise IngestError(f"row at line {lineno} has {len(row)} cells, header has {len(header)}")
        raw_rows.append([_parse_cell(cell) for cell in row])

    # cells in a mixed column stay as the raw text they came from
    attrs = []
    for i, name in enumerate(header):
        column = [r[i] for r in raw_rows]
        kind = _infer_kind(column)
        if kind is Kind.CATEGORICAL:
            for r in raw_rows:
                if r[i] is not None and not isinstance(r[i], str):
                    r[i] = _render_back(r[i])
        attrs.append(AttributeDef(name, parsed_roles.get(name, Role.DIMENSION), kind))

    return Relation(Schema(tuple(attrs)), tuple(tuple(r) for r in raw_rows))


def _render_back(v: Value) -> str:
    if isinstance(v, date):
        return v.isoformat()
    return str(v)


def value_sort_key(v: Value):
    # Nulls first, then by value; rank separates kinds so mixed columns sort stably
    if v is None:
        return (0, 0, "")
    if isinstance(v, bool):
        return (1, 0, int(v))
    if isinstance(v, (int, float)):
        return (1, 0, v)
    if isinstance(v, date):
        return (1, 1, v.toordinal())
    return (1, 2, str(v))


@dataclass(frozen=True)
class Domain:
    """Distinct non-Null values of one attribute, in ascending order."""

    values: tuple
    low: Value = None
    high: Value = None

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def attribute_domain(relation: Relation, attr: str) -> Domain:
    try:
        cells = relation.column(attr)
    except KeyError:
        raise CatalogError(f"no attribute {attr!r} in relation")
    distinct = sorted({c for c in cells if c is not None}, key=value_sort_key)
    kind = relation.schema.attr(attr).kind
    if kind in (Kind.NUMERIC, Kind.TEMPORAL) and distinct:
        return Domain(tuple(distinct), distinct[0], distinct[-1])
    return Domain(tuple(distinct))


class Catalog:
    """Mutable name -> Relation registry shared by the views built over it."""

    def __init__(self, tables: Mapping[str, Relation] | None = None):
        self._tables: dict[str, Relation] = dict(tables or {})

    def add(self, name: str, relation: Relation) -> None:
        self._tables[name] = relation

    def __getitem__(self, name: str) -> Relation:
        try:
            return self._tables[name]
        except KeyError:
            raise CatalogError(f"unknown table {name!r}")

    def __contains__(self, name: str) -> bool:
        return name in self._tables

    def names(self) -> list[str]:
        return sorted(self._tables)


def format_relation(relation: Relation, limit: int | None = None) -> str:
    """Plain fixed-width rendering for terminals."""
    names = relation.schema.names()
    rows = relation.rows if limit is None else relation.rows[:limit]
    cells = [[_format_value(v) for v in row] for row in rows]
    widths = [max([len(n)] + [len(r[i]) for r in cells]) for i, n in enumerate(names)]
    lines = [
        "  ".join(n.ljust(w) for n, w in zip(names, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    if limit is not None and len(relation.rows) > limit:
        lines.append(f"... ({len(relation.rows)} rows)")
    return "\n".join(lines)


def _format_value(v: Value) -> str:
    if v is None:
        return "null"
    if isinstance(v, float):
        return f"{v:g}"
    if isinstance(v, date):
        return v.isoformat()
    return str(v)
