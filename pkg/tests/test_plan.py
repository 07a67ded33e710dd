"""Plan node evaluation against independent reference implementations.

The join oracle here is a deliberately naive nested-loop implementation,
kept separate from the hash join in the engine so the two can disagree.
"""

import math

import pytest

from vca.errors import PlanTypeError
from vca.expr import Arith, Attr, Cmp, Const
from vca.plan import (
    AggSpec, Filter, GroupAgg, Join, JoinKind, ModelTrain, Project,
    ProjectItem, Scan, UnionAll, Values, apply_agg, canonical_parts,
    eval_plan, infer_schema, is_canonical,
)
from vca.relation import Catalog, ingest_csv


def oracle_join(left, right, keys, kind):
    """Nested-loop join; Null keys never match; unmatched right rows are
    padded with their key values in the left key positions."""
    lnames = list(left.schema.names())
    rnames = list(right.schema.names())
    rextra = [n for n in rnames if n not in keys]
    out = []
    matched_right = set()
    for lrow in left.rows:
        found = False
        for j, rrow in enumerate(right.rows):
            ok = True
            for k in keys:
                lv = lrow[lnames.index(k)]
                rv = rrow[rnames.index(k)]
                if lv is None or rv is None or lv != rv:
                    ok = False
                    break
            if ok:
                found = True
                matched_right.add(j)
                out.append(tuple(lrow) + tuple(rrow[rnames.index(c)] for c in rextra))
        if not found and kind in (JoinKind.LEFT_OUTER, JoinKind.FULL_OUTER):
            out.append(tuple(lrow) + (None,) * len(rextra))
    if kind is JoinKind.FULL_OUTER:
        for j, rrow in enumerate(right.rows):
            if j in matched_right:
                continue
            padded = []
            for name in lnames:
                padded.append(rrow[rnames.index(name)] if name in keys else None)
            out.append(tuple(padded) + tuple(rrow[rnames.index(c)] for c in rextra))
    return out


T1 = ingest_csv("k,a\nx,1\ny,2\n,3\nx,4\n", {"a": "measure"})
T2 = ingest_csv("k,b\nx,10\nz,20\n,30\n", {"b": "measure"})


@pytest.fixture
def catalog():
    cat = Catalog()
    cat.add("t1", T1)
    cat.add("t2", T2)
    return cat


@pytest.mark.parametrize("kind", list(JoinKind))
def test_join_matches_nested_loop_oracle(catalog, kind):
    plan = Join(kind, Scan("t1"), Scan("t2"), ("k",))
    got = sorted(eval_plan(plan, catalog).rows, key=repr)
    want = sorted(oracle_join(T1, T2, ("k",), kind), key=repr)
    assert got == want


@pytest.mark.parametrize("kind", list(JoinKind))
def test_cross_match_with_empty_keys(catalog, kind):
    # project away the shared column so the cross product is well typed
    right = Project(Scan("t2"), (ProjectItem(Attr("b"), "b"),))
    plan = Join(kind, Scan("t1"), right, ())
    got = eval_plan(plan, catalog)
    assert len(got.rows) == len(T1.rows) * len(T2.rows)


def test_full_outer_coalesces_key_from_right(catalog):
    plan = Join(JoinKind.FULL_OUTER, Scan("t1"), Scan("t2"), ("k",))
    rows = eval_plan(plan, catalog).rows
    padded = [r for r in rows if r[1] is None and r[2] is not None]
    # z and the right Null key arrive key-first
    assert ("z", None, 20) in padded
    assert (None, None, 30) in padded


def test_filter_keeps_only_true(catalog):
    plan = Filter(Scan("t1"), Cmp(">", Attr("a"), Const(1)))
    assert [r for r in eval_plan(plan, catalog).rows] == [("y", 2), (None, 3), ("x", 4)]
    # the Null-key row fails a comparison on k without erroring
    plan = Filter(Scan("t1"), Cmp("=", Attr("k"), Const("x")))
    assert len(eval_plan(plan, catalog).rows) == 2


def test_project_expressions(catalog):
    plan = Project(Scan("t1"), (
        ProjectItem(Attr("k"), "k"),
        ProjectItem(Arith("*", Attr("a"), Const(2)), "double"),
    ))
    assert eval_plan(plan, catalog).rows[0] == ("x", 2)


def test_groupagg_insertion_order(catalog):
    plan = GroupAgg(Scan("t1"), ("k",), AggSpec("sum", "a", "y"))
    assert eval_plan(plan, catalog).rows == (("x", 5), ("y", 2), (None, 3))


def test_groupagg_global_empty_input(catalog):
    empty = Filter(Scan("t1"), Const(False))
    plan = GroupAgg(empty, (), AggSpec("count", "a", "y"))
    assert eval_plan(plan, catalog).rows == ((0,),)
    plan = GroupAgg(empty, (), AggSpec("avg", "a", "y"))
    assert eval_plan(plan, catalog).rows == ((None,),)
    plan = GroupAgg(empty, ("k",), AggSpec("avg", "a", "y"))
    assert eval_plan(plan, catalog).rows == ()


def test_union_aligns_column_order(catalog):
    flipped = Project(Scan("t1"), (ProjectItem(Attr("a"), "a"), ProjectItem(Attr("k"), "k")))
    plan = UnionAll((Scan("t1"), flipped))
    rel = eval_plan(plan, catalog)
    assert list(rel.schema.names()) == ["k", "a"]
    assert rel.rows[:4] == rel.rows[4:]


def test_values_passthrough(catalog):
    plan = Values(T2)
    assert eval_plan(plan, catalog) is T2


def test_aggregate_semantics():
    assert apply_agg("avg", [1, 2, None, 3]) == 2.0
    assert apply_agg("avg", [None, None]) is None
    assert apply_agg("count", [1, None, 3]) == 2
    assert apply_agg("count", []) == 0
    assert apply_agg("sum", [1, 2]) == 3
    assert isinstance(apply_agg("sum", [1, 2]), int)
    assert apply_agg("sum", []) is None
    assert apply_agg("min", [3, None, 1]) == 1
    assert apply_agg("max", [3, None, 1]) == 3
    assert apply_agg("std", [2, 4]) == pytest.approx(1.0)
    assert apply_agg("std", [5]) == 0.0


def test_std_matches_two_pass_formula():
    values = [1.5, 2.25, -3.0, 4.125, 0.0]
    mean = sum(values) / len(values)
    want = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    assert apply_agg("std", values) == pytest.approx(want, abs=1e-12)


def test_groupagg_rejects_non_numeric_avg(catalog):
    plan = GroupAgg(Scan("t1"), (), AggSpec("avg", "k", "y"))
    with pytest.raises(PlanTypeError):
        infer_schema(plan, catalog)


def test_join_rejects_colliding_columns(catalog):
    with pytest.raises(PlanTypeError):
        infer_schema(Join(JoinKind.INNER, Scan("t1"), Scan("t1"), ("k",)), catalog)


def test_canonical_detection(catalog):
    plan = GroupAgg(Filter(Scan("t1"), Cmp("=", Attr("k"), Const("x"))), ("k",),
                    AggSpec("avg", "a", "y"))
    assert is_canonical(plan)
    q, groups, agg = canonical_parts(plan)
    assert groups == ("k",)
    assert agg.func == "avg"
    nested = GroupAgg(plan, ("k",), AggSpec("avg", "y", "z"))
    assert not is_canonical(nested)
    assert not is_canonical(Scan("t1"))


def test_modeltrain_fits_per_group(catalog):
    cat = Catalog()
    cat.add("pts", ingest_csv("g,x,y\na,1,3\na,2,5\nb,1,10\nb,3,10\n", {"y": "measure"}))
    plan = ModelTrain(Scan("pts"), ("g",), ("x",), "y")
    rel = eval_plan(plan, cat)
    by_group = {r[0]: r[1:] for r in rel.rows}
    b0, b1, n = by_group["a"]
    assert (round(b0, 9), round(b1, 9), n) == (1.0, 2.0, 2)
    b0, b1, n = by_group["b"]
    assert (round(b0, 9), round(b1, 9), n) == (10.0, 0.0, 2)


def test_modeltrain_skips_underdetermined_group(catalog):
    cat = Catalog()
    cat.add("pts", ingest_csv("g,x,y\na,1,3\nb,1,10\na,2,5\n", {"y": "measure"}))
    rel = eval_plan(ModelTrain(Scan("pts"), ("g",), ("x",), "y"), cat)
    assert [r[0] for r in rel.rows] == ["a"]
