"""Query plan nodes and the in-memory evaluator.

Plans are immutable trees. Evaluation has bag semantics throughout (no
implicit deduplication), Null never matches a join key, and aggregates
skip Nulls the way SQL aggregates do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import Union as TUnion

from . import ols
from .errors import PlanTypeError
from .expr import Attr, Const, Expr, eval_expr, expr_attrs, is_true
from .relation import AttributeDef, Catalog, Kind, Relation, Role, Schema

AGG_FUNCS = ("avg", "sum", "min", "max", "count", "std")
EPOCH = date(1970, 1, 1)


class JoinKind(str, Enum):
    INNER = "inner"
    LEFT_OUTER = "left_outer"
    FULL_OUTER = "full_outer"


@dataclass(frozen=True)
class Scan:
    table: str


@dataclass(frozen=True)
class Filter:
    child: "Plan"
    predicate: Expr


@dataclass(frozen=True)
class ProjectItem:
    expr: Expr
    name: str
    # role/kind pin the output attribute when the default inference is wrong,
    # e.g. a string literal that acts as a grouping attribute
    role: Role | None = None
    kind: Kind | None = None


@dataclass(frozen=True)
class Project:
    child: "Plan"
    items: tuple[ProjectItem, ...]


@dataclass(frozen=True)
class AggSpec:
    func: str
    attr: str
    name: str


@dataclass(frozen=True)
class GroupAgg:
    child: "Plan"
    group_attrs: tuple[str, ...]
    agg: AggSpec


@dataclass(frozen=True)
class Join:
    kind: JoinKind
    left: "Plan"
    right: "Plan"
    keys: tuple[str, ...]  # empty keys means a cross match


@dataclass(frozen=True)
class UnionAll:
    children: tuple["Plan", ...]


@dataclass(frozen=True)
class Values:
    relation: Relation


@dataclass(frozen=True)
class ModelTrain:
    child: "Plan"
    cond_attrs: tuple[str, ...]
    features: tuple[str, ...]
    measure: str


Plan = TUnion[Scan, Filter, Project, GroupAgg, Join, UnionAll, Values, ModelTrain]


# ---- schema inference ----

def _project_schema(child: Schema, items: tuple[ProjectItem, ...]) -> Schema:
    attrs = []
    for item in items:
        missing = expr_attrs(item.expr) - set(child.names())
        if missing:
            raise PlanTypeError(f"projection {item.name!r} references unknown attributes {sorted(missing)}")
        role, kind = item.role, item.kind
        if isinstance(item.expr, Attr):
            src = child.attr(item.expr.name)
            role = role or src.role
            kind = kind or src.kind
        elif isinstance(item.expr, Const) and isinstance(item.expr.value, str):
            role = role or Role.DIMENSION
            kind = kind or Kind.CATEGORICAL
        else:
            role = role or Role.MEASURE
            kind = kind or Kind.NUMERIC
        attrs.append(AttributeDef(item.name, role, kind))
    return Schema(tuple(attrs))


def _agg_output_kind(func: str, src: AttributeDef) -> Kind:
    if func in ("min", "max"):
        return src.kind
    return Kind.NUMERIC


def _groupagg_schema(child: Schema, group_attrs: tuple[str, ...], agg: AggSpec) -> Schema:
    if agg.func not in AGG_FUNCS:
        raise PlanTypeError(f"unknown aggregate function {agg.func!r}")
    attrs = []
    for g in group_attrs:
        if not child.has(g):
            raise PlanTypeError(f"grouping attribute {g!r} not in input")
        attrs.append(child.attr(g))
    if not child.has(agg.attr):
        raise PlanTypeError(f"aggregated attribute {agg.attr!r} not in input")
    src = child.attr(agg.attr)
    if agg.func in ("avg", "sum", "std") and src.kind is not Kind.NUMERIC:
        raise PlanTypeError(f"{agg.func} needs a numeric attribute, {agg.attr!r} is {src.kind.value}")
    if agg.name in group_attrs:
        raise PlanTypeError(f"aggregate output {agg.name!r} collides with a grouping attribute")
    attrs.append(AttributeDef(agg.name, Role.MEASURE, _agg_output_kind(agg.func, src)))
    return Schema(tuple(attrs))


def _join_schema(left: Schema, right: Schema, keys: tuple[str, ...]) -> Schema:
    for k in keys:
        if not left.has(k) or not right.has(k):
            raise PlanTypeError(f"join key {k!r} missing on one side")
        if left.attr(k).kind is not right.attr(k).kind:
            raise PlanTypeError(f"join key {k!r} has mismatched kinds")
    attrs = list(left.attrs)
    for a in right.attrs:
        if a.name in keys:
            continue
        if left.has(a.name):
            raise PlanTypeError(f"join would duplicate attribute {a.name!r}; rename before joining")
        attrs.append(a)
    return Schema(tuple(attrs))


def _union_schema(children: list[Schema]) -> Schema:
    first = children[0]
    for other in children[1:]:
        if set(other.names()) != set(first.names()):
            raise PlanTypeError(f"union inputs differ: {sorted(first.names())} vs {sorted(other.names())}")
        for a in first.attrs:
            if other.attr(a.name).kind is not a.kind:
                raise PlanTypeError(f"union attribute {a.name!r} has mismatched kinds")
    return first


def _modeltrain_schema(child: Schema, node: ModelTrain) -> Schema:
    for a in list(node.cond_attrs) + list(node.features) + [node.measure]:
        if not child.has(a):
            raise PlanTypeError(f"model attribute {a!r} not in input")
    for f in node.features:
        if child.attr(f).kind is Kind.CATEGORICAL:
            raise PlanTypeError(f"model feature {f!r} must be quantitative")
    if child.attr(node.measure).kind is not Kind.NUMERIC:
        raise PlanTypeError(f"model target {node.measure!r} must be numeric")
    attrs = [child.attr(c) for c in node.cond_attrs]
    for i in range(len(node.features) + 1):
        attrs.append(AttributeDef(f"b{i}", Role.MEASURE, Kind.NUMERIC))
    attrs.append(AttributeDef("n", Role.MEASURE, Kind.NUMERIC))
    return Schema(tuple(attrs))


def infer_schema(plan: Plan, catalog: Catalog) -> Schema:
    if isinstance(plan, Scan):
        return catalog[plan.table].schema
    if isinstance(plan, Values):
        return plan.relation.schema
    if isinstance(plan, Filter):
        child = infer_schema(plan.child, catalog)
        missing = expr_attrs(plan.predicate) - set(child.names())
        if missing:
            raise PlanTypeError(f"filter references unknown attributes {sorted(missing)}")
        return child
    if isinstance(plan, Project):
        return _project_schema(infer_schema(plan.child, catalog), plan.items)
    if isinstance(plan, GroupAgg):
        return _groupagg_schema(infer_schema(plan.child, catalog), plan.group_attrs, plan.agg)
    if isinstance(plan, Join):
        return _join_schema(infer_schema(plan.left, catalog), infer_schema(plan.right, catalog), plan.keys)
    if isinstance(plan, UnionAll):
        return _union_schema([infer_schema(c, catalog) for c in plan.children])
    if isinstance(plan, ModelTrain):
        return _modeltrain_schema(infer_schema(plan.child, catalog), plan)
    raise PlanTypeError(f"unknown plan node {plan!r}")


def contains_agg(plan: Plan) -> bool:
    if isinstance(plan, (GroupAgg, ModelTrain)):
        return True
    if isinstance(plan, Filter):
        return contains_agg(plan.child)
    if isinstance(plan, Project):
        return contains_agg(plan.child)
    if isinstance(plan, Join):
        return contains_agg(plan.left) or contains_agg(plan.right)
    if isinstance(plan, UnionAll):
        return any(contains_agg(c) for c in plan.children)
    return False


def canonical_parts(plan: Plan) -> tuple[Plan, tuple[str, ...], AggSpec] | None:
    """If the plan is a single aggregation over an aggregate-free query,
    return (inner query, grouping attrs, aggregate). Otherwise None."""
    if isinstance(plan, GroupAgg) and not contains_agg(plan.child):
        return plan.child, plan.group_attrs, plan.agg
    return None


def is_canonical(plan: Plan) -> bool:
    return canonical_parts(plan) is not None


# ---- aggregation ----

def _numeric_values(values: list, func: str) -> list[float]:
    for v in values:
        if not isinstance(v, (int, float)):
            raise PlanTypeError(f"{func} hit non-numeric value {v!r}")
    return values


def apply_agg(func: str, values: list) -> object:
    """Aggregate non-Null values with SQL semantics (empty -> Null, count -> 0)."""
    present = [v for v in values if v is not None]
    if func == "count":
        return len(present)
    if not present:
        return None
    if func == "min":
        return min(present)
    if func == "max":
        return max(present)
    present = _numeric_values(present, func)
    if func == "sum":
        if all(isinstance(v, int) for v in present):
            return sum(present)
        return math.fsum(present)
    if func == "avg":
        return math.fsum(present) / len(present)
    if func == "std":
        mean = math.fsum(present) / len(present)
        var = math.fsum((v - mean) ** 2 for v in present) / len(present)
        return math.sqrt(var)
    raise PlanTypeError(f"unknown aggregate function {func!r}")


# ---- evaluation ----

def eval_plan(plan: Plan, catalog: Catalog) -> Relation:
    if isinstance(plan, Scan):
        return catalog[plan.table]
    if isinstance(plan, Values):
        return plan.relation
    if isinstance(plan, Filter):
        child = eval_plan(plan.child, catalog)
        missing = expr_attrs(plan.predicate) - set(child.schema.names())
        if missing:
            raise PlanTypeError(f"filter references unknown attributes {sorted(missing)}")
        names = child.schema.names()
        kept = tuple(row for row in child.rows if is_true(eval_expr(plan.predicate, dict(zip(names, row)))))
        return Relation(child.schema, kept)
    if isinstance(plan, Project):
        child = eval_plan(plan.child, catalog)
        schema = _project_schema(child.schema, plan.items)
        names = child.schema.names()
        out = tuple(
            tuple(eval_expr(item.expr, dict(zip(names, row))) for item in plan.items)
            for row in child.rows
        )
        return Relation(schema, out)
    if isinstance(plan, GroupAgg):
        return _eval_groupagg(plan, eval_plan(plan.child, catalog))
    if isinstance(plan, Join):
        return _eval_join(plan, eval_plan(plan.left, catalog), eval_plan(plan.right, catalog))
    if isinstance(plan, UnionAll):
        return _eval_union(plan, [eval_plan(c, catalog) for c in plan.children])
    if isinstance(plan, ModelTrain):
        return _eval_modeltrain(plan, eval_plan(plan.child, catalog))
    raise PlanTypeError(f"unknown plan node {plan!r}")


def _eval_groupagg(plan: GroupAgg, child: Relation) -> Relation:
    schema = _groupagg_schema(child.schema, plan.group_attrs, plan.agg)
    gidx = [child.schema.index(g) for g in plan.group_attrs]
    aidx = child.schema.index(plan.agg.attr)
    groups: dict[tuple, list] = {}
    for row in child.rows:
        key = tuple(row[i] for i in gidx)
        groups.setdefault(key, []).append(row[aidx])
    if not plan.group_attrs and not groups:
        groups[()] = []  # aggregate over the empty bag still emits one row
    out = tuple(key + (apply_agg(plan.agg.func, vals),) for key, vals in groups.items())
    return Relation(schema, out)


def _eval_join(plan: Join, left: Relation, right: Relation) -> Relation:
    schema = _join_schema(left.schema, right.schema, plan.keys)
    lkey = [left.schema.index(k) for k in plan.keys]
    rkey = [right.schema.index(k) for k in plan.keys]
    rkeep = [i for i, a in enumerate(right.schema.attrs) if a.name not in plan.keys]

    index: dict[tuple, list[int]] = {}
    for j, row in enumerate(right.rows):
        key = tuple(row[i] for i in rkey)
        if any(v is None for v in key):
            continue  # Null never matches a join key
        index.setdefault(key, []).append(j)

    out: list[tuple] = []
    matched_right: set[int] = set()
    for lrow in left.rows:
        key = tuple(lrow[i] for i in lkey)
        if plan.keys and any(v is None for v in key):
            matches: list[int] = []
        elif plan.keys:
            matches = index.get(key, [])
        else:
            matches = list(range(len(right.rows)))
        if matches:
            for j in matches:
                matched_right.add(j)
                out.append(lrow + tuple(right.rows[j][i] for i in rkeep))
        elif plan.kind is not JoinKind.INNER:
            out.append(lrow + (None,) * len(rkeep))
    if plan.kind is JoinKind.FULL_OUTER:
        lpad = [None] * len(left.schema.attrs)
        keypos = {k: left.schema.index(k) for k in plan.keys}
        for j, rrow in enumerate(right.rows):
            if j in matched_right:
                continue
            padded = lpad[:]
            for k in plan.keys:
                padded[keypos[k]] = rrow[right.schema.index(k)]
            out.append(tuple(padded) + tuple(rrow[i] for i in rkeep))
    return Relation(schema, tuple(out))


def _eval_union(plan: UnionAll, children: list[Relation]) -> Relation:
    schema = _union_schema([c.schema for c in children])
    order = schema.names()
    rows: list[tuple] = []
    for child in children:
        perm = [child.schema.index(n) for n in order]
        rows.extend(tuple(row[i] for i in perm) for row in child.rows)
    return Relation(schema, tuple(rows))


def as_feature_value(v) -> float:
    """Quantitative feature encoding; temporal values become epoch days."""
    if isinstance(v, date):
        return float((v - EPOCH).days)
    if isinstance(v, bool):
        return float(int(v))
    if isinstance(v, (int, float)):
        return float(v)
    raise PlanTypeError(f"value {v!r} is not usable as a model feature")


def _eval_modeltrain(plan: ModelTrain, child: Relation) -> Relation:
    """One output row per condition group: b0..bk, then the row count used.

    Groups whose normal equations are singular are omitted; the caller
    decides how to surface that (the lift operator attaches a warning).
    """
    schema = _modeltrain_schema(child.schema, plan)
    cidx = [child.schema.index(c) for c in plan.cond_attrs]
    fidx = [child.schema.index(f) for f in plan.features]
    midx = child.schema.index(plan.measure)
    groups: dict[tuple, list[tuple[list[float], float]]] = {}
    for row in child.rows:
        key = tuple(row[i] for i in cidx)
        groups.setdefault(key, [])
        if row[midx] is None or any(row[i] is None for i in fidx):
            continue  # unusable observation
        feats = [as_feature_value(row[i]) for i in fidx]
        groups[key].append((feats, float(row[midx])))
    out = []
    for key, obs in groups.items():
        try:
            coeffs = ols.fit_ols([f for f, _ in obs], [y for _, y in obs])
        except ols.SingularSystem:
            continue
        out.append(key + tuple(coeffs) + (len(obs),))
    return Relation(schema, tuple(out))
