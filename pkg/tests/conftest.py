import pytest

from vca.expr import Attr, Cmp, Const
from vca.relation import Catalog, ingest_csv
from vca.view import make_view

FLIGHTS_CSV = """Date,Src,Delay
1,SFO,10
2,SFO,15
3,SFO,20
1,OAK,15
2,OAK,10
3,OAK,5
"""

CARS6_CSV = """cyl,carb,mpg
4,1,33
6,1,21
4,2,26
8,2,14
6,5,16
8,5,10
"""


@pytest.fixture
def flights_catalog():
    cat = Catalog()
    cat.add("flights", ingest_csv(FLIGHTS_CSV, {"Delay": "measure"}))
    return cat


@pytest.fixture
def cars_catalog():
    cat = Catalog()
    cat.add("cars", ingest_csv(CARS6_CSV, {"mpg": "measure"}))
    return cat


def flights_view(catalog, src=None, group=("Date",), agg=("avg", "Delay"), mark="bar",
                 title=""):
    predicate = Cmp("=", Attr("Src"), Const(src)) if src else None
    channels = {group[0]: "x", "y": "y"} if group else {"y": "y"}
    for extra in group[1:]:
        channels[extra] = "color"
    return make_view(catalog, "flights", predicate, group, agg, mark, channels,
                     title=title or (src or "flights"))


@pytest.fixture
def sfo(flights_catalog):
    return flights_view(flights_catalog, "SFO")


@pytest.fixture
def oak(flights_catalog):
    return flights_view(flights_catalog, "OAK")


def rows_of(view):
    return sorted(view.result().rows, key=lambda r: tuple((v is None, str(v)) for v in r))


def assert_rows(view, expected, tol=0.0):
    got = rows_of(view)
    want = sorted(expected, key=lambda r: tuple((v is None, str(v)) for v in r))
    assert len(got) == len(want), f"{got} vs {want}"
    for g, w in zip(got, want):
        assert len(g) == len(w), f"{g} vs {w}"
        for a, b in zip(g, w):
            if isinstance(a, float) and isinstance(b, (int, float)) and tol:
                assert abs(a - b) <= tol, f"{g} vs {w}"
            else:
                assert a == b, f"{g} vs {w}"
