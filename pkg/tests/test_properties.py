"""Randomized invariants of the composition operators.

Every property runs at least a hundred generated cases. Oracles are
brute-force recomputations over the raw rows so they never share code
with the plan evaluator.
"""

import math
import statistics
from datetime import date, timedelta

from hypothesis import given, settings, strategies as st

from vca.algebra import explode, extract, stat_binary, viewset_stat
from vca.expr import Attr, Cmp, Const
from vca.lift import SAMPLE_CAP, _feature_axis, _grid_points_per_feature
from vca.relation import AttributeDef, Catalog, Kind, Relation, Role, Schema
from vca.view import make_view

MANY = settings(max_examples=100, deadline=None)

FUNCS = ("avg", "sum", "min", "max", "std", "count")

measures = st.one_of(
    st.none(),
    st.integers(min_value=-9, max_value=9),
    st.floats(min_value=-9, max_value=9, allow_nan=False),
)
d0_values = st.integers(min_value=0, max_value=2)


def table_catalog(rows) -> Catalog:
    schema = Schema((
        AttributeDef("d0", Role.DIMENSION, Kind.NUMERIC),
        AttributeDef("d1", Role.DIMENSION, Kind.CATEGORICAL),
        AttributeDef("m", Role.MEASURE, Kind.NUMERIC),
    ))
    catalog = Catalog()
    catalog.add("t", Relation(schema, tuple(rows)))
    return catalog


def side_view(catalog, label, func):
    pred = Cmp("=", Attr("d1"), Const(label))
    return make_view(catalog, "t", pred, ("d0",), (func, "m"), "bar", title=label)


# Both labels get rows for d0 in {0, 1} up front, so each operand keeps at
# least two distinct keys and the right-hand unique-value drop never fires.
stat_pairs = st.tuples(
    st.lists(measures, min_size=4, max_size=4),
    st.lists(st.tuples(d0_values, st.sampled_from("ab"), measures), max_size=6),
    st.sampled_from(FUNCS),
)


def pair_rows(prefix, extras):
    return [
        (0, "a", prefix[0]), (1, "a", prefix[1]),
        (0, "b", prefix[2]), (1, "b", prefix[3]),
        *extras,
    ]


@MANY
@given(stat_pairs)
def test_difference_is_antisymmetric(case):
    prefix, extras, func = case
    catalog = table_catalog(pair_rows(prefix, extras))
    a = side_view(catalog, "a", func)
    b = side_view(catalog, "b", func)
    ab = dict(stat_binary(a, b, "-").result().rows)
    ba = dict(stat_binary(b, a, "-").result().rows)
    assert set(ab) == set(ba)
    for key, value in ab.items():
        if value is None:
            assert ba[key] is None
        else:
            assert ba[key] == -value


@MANY
@given(stat_pairs, st.sampled_from(("+", "*")))
def test_sum_and_product_are_symmetric(case, op):
    prefix, extras, func = case
    catalog = table_catalog(pair_rows(prefix, extras))
    a = side_view(catalog, "a", func)
    b = side_view(catalog, "b", func)
    ab = dict(stat_binary(a, b, op).result().rows)
    ba = dict(stat_binary(b, a, op).result().rows)
    assert ab == ba


@MANY
@given(st.lists(st.tuples(d0_values, st.sampled_from("ab"), measures), max_size=8),
       st.sampled_from(FUNCS))
def test_self_difference_is_zero(rows, func):
    catalog = table_catalog(rows)
    view = make_view(catalog, "t", None, ("d0",), (func, "m"), "bar")
    values = dict(view.result().rows)
    out = stat_binary(view, view, "-")
    for key, value in out.result().rows:
        if values[key] is None:
            assert value is None
        else:
            assert value == 0


@MANY
@given(st.lists(st.tuples(st.one_of(st.none(), d0_values),
                          st.one_of(st.none(), st.sampled_from("ab")),
                          measures),
                max_size=8),
       st.sampled_from(FUNCS),
       st.booleans())
def test_extract_with_true_predicate_is_identity(rows, func, explicit):
    catalog = table_catalog(rows)
    view = make_view(catalog, "t", None, ("d0", "d1"), (func, "m"), "bar")
    # constant comparison so Null dimension values cannot veto a row
    pred = Cmp(">", Const(1), Const(0)) if explicit else None
    out = extract(view, pred)
    assert out.canonical
    assert out.group_attrs == view.group_attrs
    assert sorted(out.result().rows, key=repr) == sorted(view.result().rows, key=repr)


def brute_agg(func, values):
    present = [v for v in values if v is not None]
    if func == "count":
        return len(present)
    if not present:
        return None
    if func == "min":
        return min(present)
    if func == "max":
        return max(present)
    floats = [float(v) for v in present]
    if func == "sum":
        return math.fsum(floats)
    if func == "avg":
        return statistics.fmean(floats)
    return statistics.pstdev(floats)


@MANY
@given(st.lists(st.tuples(st.one_of(st.none(), d0_values),
                          st.one_of(st.none(), st.sampled_from("ab")),
                          measures),
                min_size=1, max_size=8),
       st.sampled_from(FUNCS))
def test_explode_then_viewset_stat_regroups(rows, func):
    catalog = table_catalog(rows)
    view = make_view(catalog, "t", None, ("d0", "d1"), (func, "m"), "bar")
    out = viewset_stat(explode(view, ["d1"]), func)

    # oracle: aggregate the raw rows directly over whatever grouping
    # attributes survived, bypassing the member machinery entirely
    keep = [("d0", "d1").index(g) for g in out.group_attrs]
    groups = {}
    for row in rows:
        key = tuple(row[i] for i in keep)
        groups.setdefault(key, []).append(row[2])
    expected = {key: brute_agg(func, vals) for key, vals in groups.items()}

    got = {tuple(r[:-1]): r[-1] for r in out.result().rows}
    assert set(got) == set(expected)
    for key, value in expected.items():
        if value is None:
            assert got[key] is None
        else:
            assert math.isclose(got[key], value, rel_tol=0, abs_tol=1e-9)


@MANY
@given(st.integers(min_value=1, max_value=8))
def test_grid_density_fits_sampling_cap(k):
    n = _grid_points_per_feature(k)
    assert 1 <= n <= 20
    assert n ** k <= SAMPLE_CAP
    # maximal: one more point per feature would blow the cap
    assert n == 20 or (n + 1) ** k > SAMPLE_CAP


@MANY
@given(st.lists(st.tuples(st.floats(-1e6, 1e6, allow_nan=False),
                          st.floats(-1e6, 1e6, allow_nan=False)),
                min_size=1, max_size=6))
def test_sample_grid_never_exceeds_cap(bounds):
    n = _grid_points_per_feature(len(bounds))
    total = 1
    for raw_lo, raw_hi in bounds:
        lo, hi = sorted((raw_lo, raw_hi))
        axis = _feature_axis((lo, hi), n)
        assert len(axis) == (n if lo < hi else 1)
        assert axis == sorted(axis)
        total *= len(axis)
    assert total <= SAMPLE_CAP


@MANY
@given(st.integers(min_value=0, max_value=400))
def test_temporal_axis_dedupes_to_whole_days(span):
    lo = date(2024, 1, 1)
    hi = lo + timedelta(days=span)
    axis = _feature_axis((lo, hi), 20)
    assert len(axis) == len(set(axis))
    assert len(axis) <= 20
    assert axis[0] == lo and axis[-1] == hi
