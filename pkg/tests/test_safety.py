"""Composition safety verdicts: measure typing plus dimension matching."""

import pytest

from conftest import flights_view
from vca.relation import Catalog, ingest_csv
from vca.safety import (
    MatchKind, OperatorKind, Relationship, Status, check_compose,
    schema_match,
)
from vca.view import ViewSet, constant_operand, make_view


def test_schema_match_cases():
    assert schema_match(["date", "src"], ["src", "date"]) is MatchKind.EXACT
    assert schema_match(["city", "date"], ["date"]) is MatchKind.LEFT_SUPERSET
    assert schema_match(["date"], ["city", "date"]) is MatchKind.NO_MATCH
    assert schema_match(["date"], ["src"]) is MatchKind.NO_MATCH
    assert schema_match([], []) is MatchKind.EXACT


MONEY_CSV = """date,profits,losses
1,10,3
2,12,5
"""


@pytest.fixture
def money_catalog():
    cat = Catalog()
    cat.add("profits", ingest_csv("date,profits\n1,10\n2,12\n", {"profits": "measure"}))
    cat.add("losses", ingest_csv("date,losses\n1,3\n2,5\n", {"losses": "measure"}))
    return cat


def money_view(catalog, table):
    return make_view(catalog, table, None, ("date",), ("avg", table), "bar",
                     {"date": "x", "y": "y"}, title=table)


def test_same_measure_different_stats_safe(flights_catalog):
    left = flights_view(flights_catalog, "SFO")
    right = flights_view(flights_catalog, "OAK", agg=("min", "Delay"))
    verdict = check_compose(left, right)
    assert verdict.status is Status.SAFE
    assert verdict.relationship is Relationship.EXACT


def test_count_vs_base_rejected(flights_catalog):
    left = flights_view(flights_catalog, "SFO")
    right = flights_view(flights_catalog, "OAK", agg=("count", "Delay"))
    verdict = check_compose(left, right)
    assert verdict.status is Status.REJECTED
    assert verdict.warnings


def test_different_numeric_measures_overridable(money_catalog):
    verdict = check_compose(money_view(money_catalog, "profits"),
                            money_view(money_catalog, "losses"))
    assert verdict.status is Status.OVERRIDABLE
    assert verdict.relationship is Relationship.EXACT


def test_count_never_overridable(flights_catalog, money_catalog):
    left = money_view(money_catalog, "profits")
    right = make_view(money_catalog, "losses", None, ("date",), ("count", "losses"),
                      "bar", {"date": "x", "y": "y"})
    assert check_compose(left, right).status is Status.REJECTED


def test_matched_attrs_reported(flights_catalog):
    left = flights_view(flights_catalog, "SFO")
    right = flights_view(flights_catalog, "OAK")
    verdict = check_compose(left, right)
    assert verdict.matched == (("Date", "Date"),)


def test_left_superset_stat_only(flights_catalog):
    wide = flights_view(flights_catalog, None, group=("Date", "Src"))
    narrow = flights_view(flights_catalog, "SFO")
    verdict = check_compose(wide, narrow, OperatorKind.STAT)
    assert verdict.status is Status.SAFE
    assert verdict.relationship is Relationship.LEFT_SUPERSET
    assert check_compose(wide, narrow, OperatorKind.UNION).status is Status.REJECTED
    # the other direction shrinks nothing: right has more dimensions
    assert check_compose(narrow, wide, OperatorKind.STAT).status is Status.REJECTED


def test_scalar_relationship(flights_catalog):
    left = flights_view(flights_catalog, "SFO")
    verdict = check_compose(left, constant_operand(20))
    assert verdict.status is Status.SAFE
    assert verdict.relationship is Relationship.SCALAR


def test_constant_left_rejected(flights_catalog):
    verdict = check_compose(constant_operand(20), flights_view(flights_catalog, "SFO"))
    assert verdict.status is Status.REJECTED


def test_constant_union_rejected(flights_catalog):
    left = flights_view(flights_catalog, "SFO")
    verdict = check_compose(left, constant_operand(20), OperatorKind.UNION)
    assert verdict.status is Status.REJECTED


def test_right_unique_dimension_dropped_for_stat(flights_catalog):
    left = flights_view(flights_catalog, "SFO")
    # OAK grouped by (Date, Src) still composes: Src holds one value there
    right = flights_view(flights_catalog, "OAK", group=("Date", "Src"))
    verdict = check_compose(left, right, OperatorKind.STAT)
    assert verdict.status is Status.SAFE
    assert verdict.relationship is Relationship.EXACT
    assert check_compose(left, right, OperatorKind.UNION).status is Status.REJECTED


def test_no_match_rejected(flights_catalog, money_catalog):
    verdict = check_compose(flights_view(flights_catalog, "SFO"),
                            money_view(money_catalog, "profits"))
    assert verdict.status is Status.REJECTED


def test_viewset_worst_status_wins(flights_catalog):
    base = flights_view(flights_catalog, "SFO")
    good = flights_view(flights_catalog, "OAK")
    bad = flights_view(flights_catalog, "OAK", agg=("count", "Delay"))
    verdict = check_compose(ViewSet((good, bad)), base, OperatorKind.STAT)
    assert verdict.status is Status.REJECTED
    verdict = check_compose(ViewSet((good, good)), base, OperatorKind.STAT)
    assert verdict.status is Status.SAFE


def test_verdict_json_round_trip(flights_catalog):
    verdict = check_compose(flights_view(flights_catalog, "SFO"),
                            flights_view(flights_catalog, "OAK"))
    doc = verdict.to_json()
    assert doc["status"] == "Safe"
    assert doc["relationship"] == "Exact"
    assert doc["matched"] == [["Date", "Date"]]


def test_model_pair_requires_same_shape(flights_catalog):
    from vca.lift import lift
    left = flights_view(flights_catalog, "SFO")
    right = flights_view(flights_catalog, "OAK")
    m1 = lift(left, ["Date"])
    m2 = lift(right, ["Date"])
    assert check_compose(m1, m2).status is Status.SAFE
    wide = flights_view(flights_catalog, None, group=("Date", "Src"))
    m3 = lift(wide, ["Date"], ["Src"])
    assert check_compose(m1, m3).status is Status.REJECTED


def test_view_model_uses_model_dimensions(flights_catalog):
    from vca.lift import lift
    view = flights_view(flights_catalog, "SFO")
    model = lift(flights_view(flights_catalog, "OAK"), ["Date"])
    verdict = check_compose(view, model)
    assert verdict.status is Status.SAFE
