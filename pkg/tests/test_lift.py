"""Linear model views: fitting, grid sampling and model composition."""

import random
from datetime import date

import numpy as np
import pytest

from conftest import assert_rows, flights_view, rows_of
from vca.errors import (
    DEGENERATE_FIT, EmptyJoinError, EmptyModelError, OperandError,
    PlanTypeError, SafetyError, UNMATCHED_ROWS,
)
from vca.expr import Attr, Cmp, Const
from vca.algebra import extract
from vca.lift import (
    SAMPLE_CAP, _feature_axis, _grid_points_per_feature, compose_model_model,
    compose_model_view, compose_view_model, lift, sample_model_view,
)
from vca.relation import Catalog, ingest_csv
from vca.view import make_view


def make_table_view(csv_text, group, channels, measure="y", title="t", cond_roles=None):
    cat = Catalog()
    cat.add("t", ingest_csv(csv_text, {measure: "measure"}))
    return make_view(cat, "t", None, group, ("avg", measure), "point",
                     channels, title=title)


# ---- fitting ----

def test_lift_straight_line(sfo):
    mv = lift(sfo, ["Date"])
    assert mv.cond_attrs == ()
    assert mv.feature_attrs == ("Date",)
    ((key, model),) = mv.models
    assert key == ()
    intercept, slope = model.coefficients
    assert intercept == pytest.approx(5.0, abs=1e-8)
    assert slope == pytest.approx(5.0, abs=1e-8)
    assert model.training_rows == 3


def test_lift_per_condition_group(flights_catalog):
    full = flights_view(flights_catalog, None, group=("Date", "Src"))
    mv = lift(full, ["Date"], ["Src"])
    models = mv.models_map()
    assert set(models) == {("SFO",), ("OAK",)}
    assert models[("SFO",)].coefficients == pytest.approx((5.0, 5.0), abs=1e-8)
    assert models[("OAK",)].coefficients == pytest.approx((20.0, -5.0), abs=1e-8)


def test_lift_matches_least_squares_oracle():
    rng = random.Random(7)
    for _ in range(10):
        k = rng.choice([1, 2])
        groups = {}
        lines = ["g," + ",".join(f"x{i}" for i in range(k)) + ",y"]
        for g in ("a", "b"):
            n = rng.randint(k + 2, 9)
            xs = []
            while len({tuple(x) for x in xs}) < n:
                xs = [[round(rng.uniform(-5, 5), 3) for _ in range(k)]
                      for _ in range(n)]
            ys = [round(rng.uniform(-10, 10), 3) for _ in range(n)]
            groups[(g,)] = (xs, ys)
            for x, y in zip(xs, ys):
                lines.append(f"{g}," + ",".join(str(v) for v in x) + f",{y}")
        view = make_table_view(
            "\n".join(lines) + "\n",
            ("g",) + tuple(f"x{i}" for i in range(k)),
            {"g": "color", "x0": "x", "y": "y"} if k == 1
            else {"g": "color", "x0": "x", "x1": "size", "y": "y"},
        )
        mv = lift(view, [f"x{i}" for i in range(k)], ["g"])
        for key, (xs, ys) in groups.items():
            design = np.hstack([np.ones((len(xs), 1)), np.array(xs)])
            expected, *_ = np.linalg.lstsq(design, np.array(ys), rcond=None)
            got = mv.models_map()[key].coefficients
            assert got == pytest.approx(tuple(expected), abs=1e-8)


def test_lift_omits_degenerate_groups():
    view = make_table_view(
        "g,x,y\na,1,10\na,2,20\na,3,30\nb,5,1\n",
        ("g", "x"), {"g": "color", "x": "x", "y": "y"})
    mv = lift(view, ["x"], ["g"])
    assert set(mv.models_map()) == {("a",)}
    assert any(n.code == DEGENERATE_FIT for n in mv.warnings)


def test_lift_no_usable_group_is_an_error():
    view = make_table_view(
        "g,x,y\na,1,10\nb,5,1\n",
        ("g", "x"), {"g": "color", "x": "x", "y": "y"})
    with pytest.raises(EmptyModelError):
        lift(view, ["x"], ["g"])


def test_lift_validates_attributes(flights_catalog, sfo):
    full = flights_view(flights_catalog, None, group=("Date", "Src"))
    with pytest.raises(OperandError):
        lift(sfo, [])
    with pytest.raises(OperandError):
        lift(sfo, ["Delay"])
    with pytest.raises(OperandError):
        lift(full, ["Date"], ["Date"])
    with pytest.raises(PlanTypeError):
        lift(full, ["Src"])


def test_model_mapping_keeps_model_attrs_only(flights_catalog):
    full = flights_view(flights_catalog, None, group=("Date", "Src"))
    mv = lift(full, ["Date"], ["Src"])
    assert set(mv.mapping.attrs()) == {"Date", "Src", "y"}


def test_model_json_shape(sfo):
    doc = lift(sfo, ["Date"]).to_json()
    assert doc["features"] == ["Date"]
    assert doc["models"][0]["n"] == 3
    assert len(doc["models"][0]["coefficients"]) == 2
    assert doc["mark"] == "bar"


# ---- grid sampling ----

def test_grid_points_scale_down_with_features():
    assert _grid_points_per_feature(1) == 20
    assert _grid_points_per_feature(2) == 20
    assert _grid_points_per_feature(3) == 10
    assert _grid_points_per_feature(4) == 5
    assert _grid_points_per_feature(5) == 3
    for k in range(1, 8):
        assert _grid_points_per_feature(k) ** k <= SAMPLE_CAP


def test_feature_axis_even_spacing():
    axis = _feature_axis((1, 3), 20)
    assert len(axis) == 20
    assert axis[0] == 1 and axis[-1] == 3
    steps = {round(b - a, 12) for a, b in zip(axis, axis[1:])}
    assert len(steps) == 1


def test_feature_axis_degenerate_domain():
    assert _feature_axis((5, 5), 20) == [5]


def test_feature_axis_temporal_rounds_to_days():
    axis = _feature_axis((date(2024, 1, 1), date(2024, 1, 5)), 20)
    assert axis[0] == date(2024, 1, 1) and axis[-1] == date(2024, 1, 5)
    assert len(axis) == 5
    assert all(isinstance(d, date) for d in axis)


def test_sample_single_feature(sfo):
    rel = sample_model_view(lift(sfo, ["Date"]))
    assert len(rel.rows) == 20
    assert rel.rows[0] == (1, 10.0)
    assert rel.rows[-1] == (3, 20.0)


def test_sample_two_features_and_groups():
    lines = ["g,x1,x2,y"]
    rng = random.Random(3)
    for g in ("a", "b"):
        for x1 in range(4):
            for x2 in range(4):
                lines.append(f"{g},{x1},{x2},{rng.randint(0, 50)}")
    view = make_table_view("\n".join(lines) + "\n", ("g", "x1", "x2"),
                           {"g": "color", "x1": "x", "x2": "size", "y": "y"})
    rel = sample_model_view(lift(view, ["x1", "x2"], ["g"]))
    assert len(rel.rows) == 2 * 400


def test_sample_three_features_hits_cap():
    lines = ["x1,x2,x3,y"]
    rng = random.Random(4)
    for x1 in range(3):
        for x2 in range(3):
            for x3 in range(3):
                lines.append(f"{x1},{x2},{x3},{rng.randint(0, 50)}")
    view = make_table_view("\n".join(lines) + "\n", ("x1", "x2", "x3"),
                           {"x1": "x", "x2": "size", "x3": "detail", "y": "y"})
    rel = sample_model_view(lift(view, ["x1", "x2", "x3"]))
    assert len(rel.rows) == 1000


def test_temporal_feature_end_to_end():
    lines = ["d,y"]
    for i in range(5):
        lines.append(f"2024-03-0{i + 1},{10 + 3 * i}")
    view = make_table_view("\n".join(lines) + "\n", ("d",), {"d": "x", "y": "y"})
    mv = lift(view, ["d"])
    rel = sample_model_view(mv)
    assert all(isinstance(row[0], date) for row in rel.rows)
    assert len(rel.rows) == 5
    out = compose_view_model(view, mv, "-")
    assert all(abs(row[-1]) < 1e-8 for row in rows_of(out))


# ---- composition with data views ----

def test_view_minus_model_residuals(sfo):
    out = compose_view_model(sfo, lift(sfo, ["Date"]), "-")
    assert out.group_attrs == ("Date",)
    for row in rows_of(out):
        assert abs(row[-1]) <= 1e-8


def test_model_minus_view_negated(flights_catalog, sfo, oak):
    mv = lift(sfo, ["Date"])
    left = compose_model_view(mv, oak, "-")
    right = compose_view_model(oak, mv, "-")
    flipped = [(r[0], -r[1]) for r in rows_of(right)]
    assert rows_of(left) == sorted(flipped, key=lambda r: str(r[0]))


def test_compose_skips_unmatched_condition_groups(flights_catalog):
    full = flights_view(flights_catalog, None, group=("Date", "Src"))
    sfo_only = extract(full, Cmp("=", Attr("Src"), Const("SFO")))
    mv = lift(sfo_only, ["Date"], ["Src"])
    out = compose_view_model(full, mv, "-")
    assert any(n.code == UNMATCHED_ROWS for n in out.warnings)
    assert_rows(out, [
        (1, "OAK", None), (1, "SFO", 0),
        (2, "OAK", None), (2, "SFO", 0),
        (3, "OAK", None), (3, "SFO", 0),
    ], tol=1e-8)


def test_compose_with_no_matching_rows_is_an_error(flights_catalog):
    full = flights_view(flights_catalog, None, group=("Date", "Src"))
    sfo_only = extract(full, Cmp("=", Attr("Src"), Const("SFO")))
    oak_only = extract(full, Cmp("=", Attr("Src"), Const("OAK")))
    mv = lift(sfo_only, ["Date"], ["Src"])
    with pytest.raises(EmptyJoinError):
        compose_view_model(oak_only, mv, "-")


def test_compose_view_model_respects_safety(flights_catalog, sfo):
    counts = flights_view(flights_catalog, "OAK", agg=("count", "Delay"))
    with pytest.raises(SafetyError):
        compose_view_model(counts, lift(sfo, ["Date"]), "-")


# ---- model with model ----

def test_model_minus_model_grid(sfo, oak):
    out = compose_model_model(lift(sfo, ["Date"]), lift(oak, ["Date"]), "-")
    rows = rows_of(out)
    assert len(rows) == 20
    assert out.group_attrs == ("Date",)
    # (5x + 5) - (-5x + 20) = 10x - 15 over the merged [1, 3] domain
    for x, y in rows:
        assert y == pytest.approx(10 * x - 15, abs=1e-8)


def test_model_model_requires_same_shape(flights_catalog, sfo, oak):
    full = flights_view(flights_catalog, None, group=("Date", "Src"))
    conditioned = lift(full, ["Date"], ["Src"])
    with pytest.raises(SafetyError):
        compose_model_model(lift(sfo, ["Date"]), conditioned, "-")


def test_model_model_skips_one_sided_groups():
    left_view = make_table_view(
        "g,x,y\na,1,1\na,2,2\na,3,3\nb,1,5\nb,2,6\nb,3,7\n",
        ("g", "x"), {"g": "color", "x": "x", "y": "y"})
    right_view = make_table_view(
        "g,x,y\na,1,2\na,2,4\na,3,6\nb,9,1\n",
        ("g", "x"), {"g": "color", "x": "x", "y": "y"})
    left = lift(left_view, ["x"], ["g"])
    right = lift(right_view, ["x"], ["g"])  # group b is degenerate there
    out = compose_model_model(left, right, "-")
    assert any(n.code == UNMATCHED_ROWS for n in out.warnings)
    keys = {row[0] for row in rows_of(out)}
    assert keys == {"a"}


def test_model_model_no_shared_groups_is_an_error():
    left_view = make_table_view(
        "g,x,y\na,1,1\na,2,2\na,3,3\nb,9,1\n",
        ("g", "x"), {"g": "color", "x": "x", "y": "y"})
    right_view = make_table_view(
        "g,x,y\nb,1,2\nb,2,4\nb,3,6\na,9,1\n",
        ("g", "x"), {"g": "color", "x": "x", "y": "y"})
    with pytest.raises(EmptyJoinError):
        compose_model_model(lift(left_view, ["x"], ["g"]),
                            lift(right_view, ["x"], ["g"]), "-")
