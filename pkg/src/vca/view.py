"""Views: a query plan paired with a visual mapping.

A canonical view is a single group-by aggregation over a filtered table,
which is what every chart in a workspace starts as. Composition can
produce non-canonical plans; the `canonical` flag records which case a
view is in, and operators that need to take a query apart check it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

from .errors import CatalogError, MappingError, Note, OperandError, PlanTypeError
from .errors import DROPPED_DIMS, EMPTY_OPERAND
from .expr import And, Attr, Cmp, Const, Expr, IsNull, expr_attrs, format_expr
from .plan import (
    AGG_FUNCS, AggSpec, Filter, GroupAgg, Plan, Project, ProjectItem, Scan,
    canonical_parts, eval_plan, infer_schema,
)
from .relation import Catalog, Kind, Relation, Role


class MarkType(str, Enum):
    BAR = "bar"
    LINE = "line"
    POINT = "point"
    AREA = "area"
    TEXT = "text"
    RECT = "rect"


# marks that fill the span between value and baseline; superposing two of
# these occludes, so union composition juxtaposes instead
AREA_FILLING_MARKS = (MarkType.BAR, MarkType.AREA)


class Channel(str, Enum):
    X = "x"
    Y = "y"
    COLOR = "color"
    SHAPE = "shape"
    SIZE = "size"
    COLUMN = "column"
    ROW = "row"
    DETAIL = "detail"


# preference order when a union output needs a channel for the qid attribute
SERIES_CHANNEL_ORDER = (Channel.COLOR, Channel.SHAPE, Channel.SIZE, Channel.DETAIL)


@dataclass(frozen=True)
class MeasureType:
    """Output type of a measure expression, used for compatibility checks."""

    kind: str  # "base" | "count" | "wildcard"
    attr: str | None = None
    numeric: bool = True

    @staticmethod
    def base(attr: str, numeric: bool = True) -> "MeasureType":
        return MeasureType("base", attr, numeric)

    @staticmethod
    def count(attr: str) -> "MeasureType":
        return MeasureType("count", attr, True)

    @staticmethod
    def wildcard() -> "MeasureType":
        return MeasureType("wildcard", None, True)

    def compatible(self, other: "MeasureType") -> bool:
        if self.kind == "wildcard" or other.kind == "wildcard":
            return True
        return self == other

    def describe(self) -> str:
        if self.kind == "wildcard":
            return "*"
        if self.kind == "count":
            return f"count<{self.attr}>"
        return str(self.attr)


def measure_type_of(func: str | None, attr: str | None, numeric: bool = True) -> MeasureType:
    """Typing rule for aggregated measures: count is its own type family,
    every other supported aggregate keeps the attribute's own type."""
    if func is None and attr is None:
        return MeasureType.wildcard()
    if func == "count":
        return MeasureType.count(attr)
    if func is None or func in AGG_FUNCS:
        return MeasureType.base(attr, numeric)
    raise PlanTypeError(f"unknown aggregate function {func!r}")


@dataclass(frozen=True)
class Measure:
    func: str | None
    attr: str | None
    mtype: MeasureType
    name: str = "y"

    def to_json(self) -> dict:
        return {"func": self.func, "attr": self.attr, "name": self.name, "type": self.mtype.describe()}


@dataclass(frozen=True)
class VisualMapping:
    mark: MarkType
    channels: tuple[tuple[str, Channel], ...]

    def __post_init__(self):
        used = [c for _, c in self.channels]
        if len(set(used)) != len(used):
            raise MappingError(f"channel assigned twice in {self.channels}")
        attrs = [a for a, _ in self.channels]
        if len(set(attrs)) != len(attrs):
            raise MappingError(f"attribute mapped twice in {self.channels}")

    def channel_of(self, attr: str) -> Channel | None:
        for a, c in self.channels:
            if a == attr:
                return c
        return None

    def used_channels(self) -> set[Channel]:
        return {c for _, c in self.channels}

    def attrs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.channels)

    def without(self, attrs: Sequence[str]) -> "VisualMapping":
        drop = set(attrs)
        return VisualMapping(self.mark, tuple((a, c) for a, c in self.channels if a not in drop))

    def adding(self, attr: str, channel: Channel) -> "VisualMapping":
        return VisualMapping(self.mark, self.channels + ((attr, channel),))

    def restricted_to(self, attrs: Sequence[str]) -> "VisualMapping":
        keep = set(attrs)
        return VisualMapping(self.mark, tuple((a, c) for a, c in self.channels if a in keep))

    def to_json(self) -> dict:
        return {a: c.value for a, c in self.channels}


def parse_mapping(mark: MarkType | str, channels: Mapping[str, Channel | str]) -> VisualMapping:
    try:
        mk = MarkType(mark)
    except ValueError:
        raise MappingError(f"unknown mark type {mark!r}")
    pairs = []
    for attr, ch in channels.items():
        try:
            pairs.append((attr, Channel(ch)))
        except ValueError:
            raise MappingError(f"unknown channel {ch!r} for attribute {attr!r}")
    return VisualMapping(mk, tuple(pairs))


_ids = itertools.count(1)


def next_id(prefix: str = "v") -> str:
    return f"{prefix}{next(_ids)}"


@dataclass(frozen=True)
class View:
    id: str
    title: str
    plan: Plan
    group_attrs: tuple[str, ...]
    measure: Measure
    mapping: VisualMapping
    canonical: bool
    catalog: Catalog = field(compare=False, repr=False)
    source_table: str | None = None
    layout: str | None = None  # set on union outputs: "superpose" | "juxtapose"
    series: str | None = None  # qid attribute name on union outputs
    warnings: tuple[Note, ...] = ()

    def result(self) -> Relation:
        return eval_plan(self.plan, self.catalog)

    def schema(self):
        return infer_schema(self.plan, self.catalog)

    def display_title(self) -> str:
        return self.title or self.id

    def with_warnings(self, *notes: Note) -> "View":
        return replace(self, warnings=self.warnings + tuple(notes))

    def inner_filter(self) -> Expr | None:
        parts = canonical_parts(self.plan)
        if parts is None:
            return None
        q = parts[0]
        if isinstance(q, Filter) and isinstance(q.child, Scan):
            return q.predicate
        return None

    def to_json(self) -> dict:
        f = self.inner_filter()
        return {
            "id": self.id,
            "title": self.display_title(),
            "source_table": self.source_table,
            "filter": format_expr(f) if f is not None else None,
            "group_attrs": list(self.group_attrs),
            "measure": self.measure.to_json(),
            "mark": self.mapping.mark.value,
            "channels": self.mapping.to_json(),
            "canonical": self.canonical,
            "layout": self.layout,
            "series": self.series,
            "warnings": [w.to_json() for w in self.warnings],
        }


@dataclass(frozen=True)
class ViewSet:
    views: tuple[View, ...]

    def __post_init__(self):
        if not self.views:
            raise OperandError("a viewset cannot be empty")

    def __iter__(self):
        return iter(self.views)

    def __len__(self):
        return len(self.views)

    def __getitem__(self, i):
        return self.views[i]

    def to_json(self) -> dict:
        return {"views": [v.to_json() for v in self.views]}


@dataclass(frozen=True)
class ConstantView:
    """Right-operand scalar: compatible with any numeric measure."""

    id: str
    value: float
    label: str

    @property
    def mtype(self) -> MeasureType:
        return MeasureType.wildcard()

    def to_json(self) -> dict:
        return {"id": self.id, "constant": self.value, "label": self.label}


def constant_operand(value, label: str | None = None) -> ConstantView:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise OperandError(f"constant operand must be a finite number, got {value!r}")
    return ConstantView(next_id("c"), value, label if label is not None else format_number(value))


def format_number(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


def push_filter(q: Plan, pred: Expr) -> Plan:
    if isinstance(q, Filter):
        return Filter(q.child, And((q.predicate, pred)))
    return Filter(q, pred)


def make_view(
    catalog: Catalog,
    table: str,
    filter: Expr | None,
    group_attrs: Sequence[str],
    agg: tuple[str, str],
    mark: MarkType | str,
    channels: Mapping[str, Channel | str] | None = None,
    title: str = "",
) -> View:
    """Build a canonical view over a catalog table.

    `agg` is (function, attribute); the attribute must be the table's
    measure. Channels default to nothing mapped, which is fine for
    headless use.
    """
    relation = catalog[table]
    schema = relation.schema
    for g in group_attrs:
        if not schema.has(g):
            raise CatalogError(f"unknown attribute {g!r} in table {table!r}")
        if schema.attr(g).role is not Role.DIMENSION:
            raise PlanTypeError(f"group attribute {g!r} is not a dimension")
    func, attr = agg
    if not schema.has(attr):
        raise CatalogError(f"unknown attribute {attr!r} in table {table!r}")
    if schema.attr(attr).role is not Role.MEASURE:
        raise PlanTypeError(f"aggregate attribute {attr!r} is not the table's measure")
    if func not in AGG_FUNCS:
        raise PlanTypeError(f"unknown aggregate function {func!r}")
    if filter is not None:
        missing = expr_attrs(filter) - set(schema.names())
        if missing:
            raise CatalogError(f"filter references unknown attributes {sorted(missing)}")

    out_name = "y"
    while out_name in group_attrs:
        out_name += "_"
    q: Plan = Scan(table)
    if filter is not None and filter != Const(True):
        q = Filter(q, filter)
    plan = GroupAgg(q, tuple(group_attrs), AggSpec(func, attr, out_name))

    mapping = parse_mapping(mark, channels or {})
    out_names = set(group_attrs) | {out_name}
    for a in mapping.attrs():
        if a not in out_names:
            raise MappingError(f"channel mapped to {a!r}, which is not in the view output")

    numeric = schema.attr(attr).kind is Kind.NUMERIC
    measure = Measure(func, attr, measure_type_of(func, attr, numeric), out_name)
    return View(
        id=next_id(),
        title=title,
        plan=plan,
        group_attrs=tuple(group_attrs),
        measure=measure,
        mapping=mapping,
        canonical=True,
        catalog=catalog,
        source_table=table,
    )


def key_predicate(attr: str, value) -> Expr:
    if value is None:
        return IsNull(Attr(attr))
    return Cmp("=", Attr(attr), Const(value))


def legend_operand(view: View, attr: str, label) -> View:
    """Pin one grouping attribute to a legend label.

    The label filter is pushed into the inner query when the view is
    canonical, so the result stays canonical; the pinned attribute leaves
    both the grouping list and the mapping.
    """
    if attr not in view.group_attrs:
        raise OperandError(f"{attr!r} is not a grouping attribute of {view.display_title()}")
    pred = key_predicate(attr, label)
    remaining = tuple(g for g in view.group_attrs if g != attr)
    parts = canonical_parts(view.plan)
    if parts is not None:
        q, _, agg = parts
        plan: Plan = GroupAgg(push_filter(q, pred), remaining, agg)
        canonical = True
    else:
        keep = [ProjectItem(Attr(g), g) for g in remaining]
        keep.append(ProjectItem(Attr(view.measure.name), view.measure.name))
        plan = Project(Filter(view.plan, pred), tuple(keep))
        canonical = False
    out = replace(
        view,
        id=next_id(),
        title=f"{view.display_title()} [{attr}={format_number(label) if isinstance(label, (int, float)) else label}]",
        plan=plan,
        group_attrs=remaining,
        mapping=view.mapping.without([attr]),
        canonical=canonical,
        layout=None,
        series=None if view.series == attr else view.series,
        warnings=(),
    )
    if len(eval_plan(plan, view.catalog)) == 0:
        out = out.with_warnings(Note(EMPTY_OPERAND, f"no rows match {attr}={label!r}"))
    return out


def marks_operand(view: View, selection: Expr) -> View:
    """Keep only the marks matched by a selection predicate over the
    view's output attributes. Grouping attributes are unchanged."""
    out_names = set(view.group_attrs) | {view.measure.name}
    missing = expr_attrs(selection) - out_names
    if missing:
        raise OperandError(f"selection references attributes not in the view output: {sorted(missing)}")
    parts = canonical_parts(view.plan)
    dims_only = not (expr_attrs(selection) & {view.measure.name})
    if parts is not None and dims_only:
        q, group_attrs, agg = parts
        plan: Plan = GroupAgg(push_filter(q, selection), group_attrs, agg)
        canonical = True
    else:
        # a selection on the aggregated measure cannot move below the
        # group-by, so the filter stays on top and canonicality is lost
        plan = Filter(view.plan, selection)
        canonical = False
    out = replace(view, id=next_id(), title=f"{view.display_title()} [marks]",
                  plan=plan, canonical=canonical, warnings=())
    if len(eval_plan(plan, view.catalog)) == 0:
        out = out.with_warnings(Note(EMPTY_OPERAND, "selection matches no marks"))
    return out


def cell_operand(view: View, row_key: Mapping[str, object]) -> View:
    """Pin every grouping attribute to a single cell, yielding a scalar view."""
    if set(row_key) != set(view.group_attrs):
        raise OperandError(
            f"cell key must pin exactly the grouping attributes {list(view.group_attrs)}, got {sorted(row_key)}"
        )
    result = view.result()
    names = result.schema.names()
    hits = 0
    for row in result.rows:
        env = dict(zip(names, row))
        if all(env[a] == v if v is not None else env[a] is None for a, v in row_key.items()):
            hits += 1
    if hits != 1:
        raise OperandError(f"cell key matches {hits} rows, expected exactly 1")

    preds = [key_predicate(a, row_key[a]) for a in view.group_attrs]
    pred: Expr = preds[0] if len(preds) == 1 else And(tuple(preds))
    parts = canonical_parts(view.plan)
    if parts is not None:
        q, _, agg = parts
        plan: Plan = GroupAgg(push_filter(q, pred), (), agg)
        canonical = True
    else:
        plan = Project(Filter(view.plan, pred), (ProjectItem(Attr(view.measure.name), view.measure.name),))
        canonical = False
    key_text = ", ".join(f"{a}={row_key[a]!r}" for a in view.group_attrs)
    return replace(
        view,
        id=next_id(),
        title=f"{view.display_title()} [{key_text}]",
        plan=plan,
        group_attrs=(),
        mapping=view.mapping.restricted_to([view.measure.name]),
        canonical=canonical,
        layout=None,
        series=None,
        warnings=(),
    )


def drop_unique_dims(view: View) -> tuple[View, tuple[str, ...]]:
    """Remove grouping attributes that carry a single distinct value in the
    view's result. Used on right operands of statistical composition and,
    in its every-member form, by n-ary aggregation."""
    result = view.result()
    dropped = tuple(g for g in view.group_attrs if len(set(result.column(g))) == 1)
    if not dropped:
        return view, ()
    return project_out_dims(view, dropped), dropped


def project_out_dims(view: View, dropped: Sequence[str]) -> View:
    remaining = tuple(g for g in view.group_attrs if g not in set(dropped))
    parts = canonical_parts(view.plan)
    if parts is not None:
        q, _, agg = parts
        plan: Plan = GroupAgg(q, remaining, agg)
        canonical = True
    else:
        keep = [ProjectItem(Attr(g), g) for g in remaining]
        keep.append(ProjectItem(Attr(view.measure.name), view.measure.name))
        plan = Project(view.plan, tuple(keep))
        canonical = False
    note = Note(DROPPED_DIMS, f"dropped single-valued grouping attributes: {', '.join(dropped)}")
    return replace(
        view,
        id=next_id(),
        plan=plan,
        group_attrs=remaining,
        mapping=view.mapping.without(dropped),
        canonical=canonical,
        series=None if view.series in set(dropped) else view.series,
        warnings=view.warnings + (note,),
    )
