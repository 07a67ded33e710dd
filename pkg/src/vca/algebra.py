"""Composition operators over views and viewsets.

Statistical composition joins two aggregated queries and combines their
measures with an arithmetic operator; union composition concatenates
marks under a new series attribute (qid); extract and explode take views
apart; n-ary aggregation recomputes a statistic over the members' raw
(pre-aggregated) rows, never over their aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence, Union as TUnion

from .errors import (
    ClosureError, MappingError, Note, OperandError, PlanTypeError, SafetyError,
    DROPPED_DIMS, NON_CANONICAL,
)
from .expr import And, Arith, Attr, Const, Expr, TRUE, expr_attrs, rename_attrs
from .plan import (
    AGG_FUNCS, AggSpec, Filter, GroupAgg, Join, JoinKind, Plan, Project,
    ProjectItem, UnionAll, Values, canonical_parts, eval_plan,
)
from .relation import AttributeDef, Kind, Relation, Role, Schema, value_sort_key
from .safety import OperatorKind, Relationship, SafetyVerdict, Status, check_compose
from .view import (
    AREA_FILLING_MARKS, Channel, ConstantView, Measure, MeasureType,
    SERIES_CHANNEL_ORDER, View, ViewSet, drop_unique_dims, key_predicate,
    next_id, push_filter,
)


class LayoutHint(str, Enum):
    SUPERPOSE = "superpose"
    JUXTAPOSE = "juxtapose"


@dataclass(frozen=True)
class BinaryOp:
    """Measure combinator for statistical composition.

    `expr` references the two sides as attributes y1 and y2; the stock
    operators are built from that form too.
    """

    symbol: str
    expr: Expr
    symmetric: bool

    @staticmethod
    def named(symbol: str) -> "BinaryOp":
        symbol = {"−": "-", "×": "*", "÷": "/"}.get(symbol, symbol)
        if symbol not in ("+", "-", "*", "/"):
            raise PlanTypeError(f"unknown binary operator {symbol!r}")
        return BinaryOp(symbol, Arith(symbol, Attr("y1"), Attr("y2")), symbol in ("+", "*"))

    @staticmethod
    def custom(expr: Expr, symbol: str = "f", symmetric: bool = False) -> "BinaryOp":
        extra = expr_attrs(expr) - {"y1", "y2"}
        if extra:
            raise PlanTypeError(f"custom operator may only reference y1 and y2, found {sorted(extra)}")
        return BinaryOp(symbol, expr, symmetric)


SUB = BinaryOp.named("-")
ADD = BinaryOp.named("+")
MUL = BinaryOp.named("*")
DIV = BinaryOp.named("/")


def as_op(op: BinaryOp | str | None) -> BinaryOp:
    if op is None:
        return SUB  # difference is the default comparison
    if isinstance(op, BinaryOp):
        return op
    return BinaryOp.named(op)


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "_"
    return name


def _combined_measure(left_m: Measure, right_t: MeasureType) -> Measure:
    mtype = left_m.mtype if left_m.mtype.kind != "wildcard" else right_t
    return Measure(None, None, mtype, left_m.name)


def _renamed_side(view: View, out_name: str) -> Plan:
    items = [ProjectItem(Attr(g), g) for g in view.group_attrs]
    items.append(ProjectItem(Attr(view.measure.name), out_name))
    return Project(view.plan, tuple(items))


def _require_ok(verdict: SafetyVerdict, override: bool) -> None:
    if verdict.status is Status.REJECTED:
        raise SafetyError(verdict.reason(), verdict)
    if verdict.status is Status.OVERRIDABLE and not override:
        raise SafetyError("measures differ; pass override=True to compose anyway", verdict)


def stat_binary(left: View, right: View | ConstantView, op: BinaryOp | str | None = None,
                override: bool = False) -> View:
    """Combine two views' measures over their matched grouping attributes.

    Exact matches use a full outer join so unmatched groups survive (with
    Null measures); a right side whose attributes are a strict subset
    joins left-outer onto the left side; constants and scalar views apply
    to every row.
    """
    op = as_op(op)
    verdict = check_compose(left, right, OperatorKind.STAT)
    _require_ok(verdict, override)

    taken = set(left.group_attrs) | {left.measure.name}
    if isinstance(right, View):
        taken |= set(right.group_attrs) | {right.measure.name}
    n1 = _fresh("y1", taken)
    n2 = _fresh("y2", taken | {n1})

    lplan = _renamed_side(left, n1)
    if isinstance(right, ConstantView):
        rel_schema = Schema((AttributeDef(n2, Role.MEASURE, Kind.NUMERIC),))
        rplan: Plan = Values(Relation(rel_schema, ((right.value,),)))
        keys: tuple[str, ...] = ()
        join_kind = JoinKind.LEFT_OUTER
        right_title = right.label
        right_t = right.mtype
    else:
        reduced, _ = drop_unique_dims(right)
        rplan = _renamed_side(reduced, n2)
        right_title = right.display_title()
        right_t = right.measure.mtype
        if verdict.relationship is Relationship.EXACT:
            keys = left.group_attrs
            join_kind = JoinKind.FULL_OUTER
        else:
            keys = tuple(g for g in left.group_attrs if g in set(reduced.group_attrs))
            join_kind = JoinKind.LEFT_OUTER

    joined = Join(join_kind, lplan, rplan, keys)
    combined = rename_attrs(op.expr, {"y1": n1, "y2": n2})
    items = [ProjectItem(Attr(g), g) for g in left.group_attrs]
    items.append(ProjectItem(combined, left.measure.name))
    plan = Project(joined, tuple(items))

    return View(
        id=next_id(),
        title=f"{left.display_title()} {op.symbol} {right_title}",
        plan=plan,
        group_attrs=left.group_attrs,
        measure=_combined_measure(left.measure, right_t),
        mapping=left.mapping,
        canonical=False,
        catalog=left.catalog,
        source_table=None,
        layout=left.layout,
        series=left.series,
        warnings=verdict.warnings,
    )


# ---- union composition ----

def _qid_values(views: Sequence[View]) -> list[str]:
    titles = [v.title for v in views]
    if all(titles) and len(set(titles)) == len(titles):
        return titles
    ids = [v.id for v in views]
    if len(set(ids)) == len(ids):
        return ids
    return [f"v{i + 1}" for i in range(len(views))]


def _free_series_channel(mapping) -> Channel:
    used = mapping.used_channels()
    for ch in SERIES_CHANNEL_ORDER:
        if ch not in used:
            return ch
    raise MappingError("no free channel (color, shape, size, detail) for the series attribute")


def union_nary(views: Sequence[View], title: str | None = None) -> View:
    """Union two or more views into one segmented by a fresh qid attribute."""
    if len(views) < 2:
        raise OperandError("union needs at least two views")
    first = views[0]
    for other in views[1:]:
        verdict = check_compose(first, other, OperatorKind.UNION)
        if not verdict.ok:
            raise SafetyError(verdict.reason(), verdict)

    qids = _qid_values(views)
    taken = set(first.group_attrs) | {first.measure.name}
    qid_attr = _fresh("qid", taken)
    group_attrs = first.group_attrs + (qid_attr,)
    out_name = first.measure.name

    parts = [canonical_parts(v.plan) for v in views]
    same_agg = all(p is not None for p in parts) and len(
        {(p[2].func, p[2].attr) for p in parts if p is not None}
    ) == 1
    warnings: tuple[Note, ...] = ()
    if same_agg:
        agg = parts[0][2]
        branches = []
        for p, qid in zip(parts, qids):
            q = p[0]
            items = [ProjectItem(Attr(g), g) for g in first.group_attrs]
            items.append(ProjectItem(Attr(agg.attr), agg.attr))
            items.append(ProjectItem(Const(qid), qid_attr, Role.DIMENSION, Kind.CATEGORICAL))
            branches.append(Project(q, tuple(items)))
        plan: Plan = GroupAgg(UnionAll(tuple(branches)), group_attrs, AggSpec(agg.func, agg.attr, out_name))
        canonical = True
        measure = first.measure
    else:
        branches = []
        for v, qid in zip(views, qids):
            items = [ProjectItem(Attr(g), g) for g in first.group_attrs]
            items.append(ProjectItem(Const(qid), qid_attr, Role.DIMENSION, Kind.CATEGORICAL))
            items.append(ProjectItem(Attr(v.measure.name), out_name))
            branches.append(Project(v.plan, tuple(items)))
        plan = UnionAll(tuple(branches))
        canonical = False
        measure = Measure(None, None, first.measure.mtype, out_name)
        warnings = (Note(NON_CANONICAL, "members mix aggregates or are not canonical; the union is not canonical"),)

    mapping = first.mapping.adding(qid_attr, _free_series_channel(first.mapping))
    layout = LayoutHint.JUXTAPOSE if any(v.mapping.mark in AREA_FILLING_MARKS for v in views) else LayoutHint.SUPERPOSE
    return View(
        id=next_id(),
        title=title or " ∪ ".join(v.display_title() for v in views),
        plan=plan,
        group_attrs=group_attrs,
        measure=measure,
        mapping=mapping,
        canonical=canonical,
        catalog=first.catalog,
        source_table=None,
        layout=layout.value,
        series=qid_attr,
        warnings=warnings,
    )


def union_binary(left: View, right: View) -> View:
    return union_nary([left, right])


def viewset_union(viewset: ViewSet) -> View:
    return union_nary(list(viewset))


# ---- decomposition ----

def extract(view: View, predicate: Expr | None = None, warn_empty: bool = False) -> View:
    """Filter a view's marks; with no predicate this is a plain copy.

    Predicates over grouping attributes push below the aggregation, so
    canonical views stay canonical; predicates touching the measure leave
    a filter on top and the result is no longer canonical.
    """
    if predicate is None or predicate == TRUE:
        return replace(view, id=next_id(), title=view.display_title())
    out_names = set(view.group_attrs) | {view.measure.name}
    missing = expr_attrs(predicate) - out_names
    if missing:
        raise OperandError(f"predicate references attributes not in the view output: {sorted(missing)}")
    parts = canonical_parts(view.plan)
    dims_only = not (expr_attrs(predicate) & {view.measure.name})
    if parts is not None and dims_only:
        q, group_attrs, agg = parts
        plan: Plan = GroupAgg(push_filter(q, predicate), group_attrs, agg)
        canonical = True
    else:
        plan = Filter(view.plan, predicate)
        canonical = False
    out = replace(view, id=next_id(), title=f"{view.display_title()} [subset]",
                  plan=plan, canonical=canonical, warnings=())
    if warn_empty and len(eval_plan(plan, view.catalog)) == 0:
        from .errors import EMPTY_OPERAND
        out = out.with_warnings(Note(EMPTY_OPERAND, "selection matches no marks"))
    return out


def explode(view: View, attrs: Sequence[str]) -> ViewSet:
    """Split a view into one member per distinct value tuple of `attrs`.

    The exploded attributes leave each member's grouping list and mapping;
    members of a canonical view stay canonical because the pinning filter
    moves into the inner query.
    """
    for a in attrs:
        if a not in view.group_attrs:
            raise OperandError(f"{a!r} is not a grouping attribute of {view.display_title()}")
    if not attrs:
        return ViewSet((replace(view, id=next_id()),))

    result = view.result()
    idx = [result.schema.index(a) for a in attrs]
    seen = {tuple(row[i] for i in idx) for row in result.rows}
    if not seen:
        raise OperandError("cannot explode a view with no rows")
    combos = sorted(seen, key=lambda t: tuple(value_sort_key(v) for v in t))

    remaining = tuple(g for g in view.group_attrs if g not in set(attrs))
    parts = canonical_parts(view.plan)
    members = []
    for combo in combos:
        preds = [key_predicate(a, v) for a, v in zip(attrs, combo)]
        pred: Expr = preds[0] if len(preds) == 1 else And(tuple(preds))
        if parts is not None:
            q, _, agg = parts
            plan: Plan = GroupAgg(push_filter(q, pred), remaining, agg)
            canonical = True
        else:
            items = [ProjectItem(Attr(g), g) for g in remaining]
            items.append(ProjectItem(Attr(view.measure.name), view.measure.name))
            plan = Project(Filter(view.plan, pred), tuple(items))
            canonical = False
        label = ", ".join(f"{a}={v}" for a, v in zip(attrs, combo))
        members.append(replace(
            view,
            id=next_id(),
            title=f"{view.display_title()} [{label}]",
            plan=plan,
            group_attrs=remaining,
            mapping=view.mapping.without(attrs),
            canonical=canonical,
            layout=None,
            series=None if view.series in set(attrs) else view.series,
            warnings=(),
        ))
    return ViewSet(tuple(members))


def marks_viewset(view: View) -> ViewSet:
    """One member per mark: explode by every grouping attribute."""
    return explode(view, view.group_attrs)


# ---- n-ary statistical aggregation ----

def viewset_stat(viewset: ViewSet, func: str) -> View:
    """Aggregate the members' raw rows with `func`.

    The union happens below the group-by, over each member's
    pre-aggregated rows, so e.g. avg is the average of the underlying
    data and never an average of averages. Requires canonical members.
    """
    if func not in AGG_FUNCS:
        raise PlanTypeError(f"unknown aggregate function {func!r}")
    views = list(viewset)
    parts = []
    for v in views:
        p = canonical_parts(v.plan)
        if p is None:
            raise ClosureError(
                f"{v.display_title()} is not a canonical aggregation; "
                "statistical composition output cannot be aggregated further"
            )
        parts.append(p)
    first = views[0]
    for other in views[1:]:
        verdict = check_compose(first, other, OperatorKind.VIEWSET_STAT)
        if not verdict.ok:
            raise SafetyError(verdict.reason(), verdict)

    src_attr = parts[0][2].attr
    results = [v.result() for v in views]
    dropped = tuple(
        g for g in first.group_attrs
        if all(len(set(r.column(g))) == 1 for r in results)
    )
    remaining = tuple(g for g in first.group_attrs if g not in set(dropped))

    branches = []
    for p in parts:
        q = p[0]
        items = [ProjectItem(Attr(g), g) for g in remaining]
        items.append(ProjectItem(Attr(src_attr), src_attr))
        branches.append(Project(q, tuple(items)))
    out_name = _fresh(first.measure.name, set(remaining))
    plan = GroupAgg(UnionAll(tuple(branches)), remaining, AggSpec(func, src_attr, out_name))

    numeric = first.measure.mtype.numeric
    warnings: tuple[Note, ...] = ()
    if dropped:
        warnings = (Note(DROPPED_DIMS, f"dropped single-valued grouping attributes: {', '.join(dropped)}"),)
    return View(
        id=next_id(),
        title=f"{func}({', '.join(v.display_title() for v in views)})",
        plan=plan,
        group_attrs=remaining,
        measure=Measure(func, src_attr, _stat_mtype(func, src_attr, numeric), out_name),
        mapping=first.mapping.without(dropped),
        canonical=True,
        catalog=first.catalog,
        source_table=None,
        warnings=warnings,
    )


def _stat_mtype(func: str, attr: str, numeric: bool) -> MeasureType:
    if func == "count":
        return MeasureType.count(attr)
    return MeasureType.base(attr, numeric)


# ---- cross composition ----

Composable = TUnion[View, ViewSet, ConstantView]


def compose_pair(left, right, op: BinaryOp | str | None = None, override: bool = False):
    """Binary composition dispatch: data views, constants and model views."""
    from .lift import ModelView, compose_model_model, compose_view_model, compose_model_view
    if op == "union":
        return union_binary(left, right)
    if isinstance(left, ModelView) and isinstance(right, ModelView):
        return compose_model_model(left, right, as_op(op), override)
    if isinstance(right, ModelView):
        return compose_view_model(left, right, as_op(op), override)
    if isinstance(left, ModelView):
        return compose_model_view(left, right, as_op(op), override)
    return stat_binary(left, right, op, override)


def viewset_cross(lhs, rhs, op: BinaryOp | str | None = None, override: bool = False) -> ViewSet:
    """Apply a binary operator across viewset members, all or nothing.

    Every pair is safety-checked up front; if any pair fails, nothing is
    composed and the error lists the failing pairs.
    """
    pairs: list[tuple] = []
    if isinstance(lhs, ViewSet) and isinstance(rhs, ViewSet):
        pairs = [(a, b) for a in lhs for b in rhs]
    elif isinstance(lhs, ViewSet):
        pairs = [(a, rhs) for a in lhs]
    elif isinstance(rhs, ViewSet):
        pairs = [(lhs, b) for b in rhs]
    else:
        raise OperandError("cross composition needs a viewset on at least one side")

    kind = OperatorKind.UNION if op == "union" else OperatorKind.STAT
    failures = []
    for a, b in pairs:
        verdict = check_compose(a, b, kind)
        if verdict.status is Status.REJECTED or (
            verdict.status is Status.OVERRIDABLE and not override
        ):
            failures.append((_name_of(a), _name_of(b), verdict.reason()))
    if failures:
        detail = "; ".join(f"{a} with {b}: {why}" for a, b, why in failures)
        raise SafetyError(f"{len(failures)} of {len(pairs)} pairs cannot compose: {detail}")
    return ViewSet(tuple(compose_pair(a, b, op, override) for a, b in pairs))


def _name_of(operand) -> str:
    if isinstance(operand, ConstantView):
        return operand.label
    if isinstance(operand, View):
        return operand.display_title()
    return getattr(operand, "title", None) or getattr(operand, "id", "?")
