"""HTTP endpoints: happy paths, operand forms and error mapping."""

import pytest
from fastapi.testclient import TestClient

from conftest import CARS6_CSV, FLIGHTS_CSV
from vca.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


def add_flights(client, session=None):
    body = {"name": "flights", "csv": FLIGHTS_CSV, "measure": "Delay"}
    sid = session or "default"
    r = client.post(f"/sessions/{sid}/tables", json=body)
    assert r.status_code == 200, r.text
    return r.json()


def make_view(client, src=None, agg=None, session=None, **extra):
    body = {
        "table": "flights",
        "group": ["Date"],
        "agg": agg or {"func": "avg", "attr": "Delay"},
        "mark": "bar",
        "title": src or "flights",
    }
    if src:
        body["filter"] = f"Src = '{src}'"
    if session:
        body["session"] = session
    body.update(extra)
    r = client.post("/views", json=body)
    assert r.status_code == 200, r.text
    return r.json()


def sorted_rows(doc):
    return sorted(tuple(row) for row in doc["rows"])


def column_names(doc):
    return [c["name"] for c in doc["columns"]]


# ---- sessions and tables ----

def test_session_lifecycle(client):
    r = client.post("/sessions", json={"session": "work"})
    assert r.status_code == 200
    assert r.json() == {"session": "work", "revision": 0}

    r = client.get("/sessions/work")
    assert r.json()["tables"] == []

    r = client.delete("/sessions/work")
    assert r.status_code == 204
    assert client.get("/sessions/work").status_code == 404


def test_generated_session_ids(client):
    a = client.post("/sessions").json()["session"]
    b = client.post("/sessions").json()["session"]
    assert a != b


def test_duplicate_session_rejected(client):
    client.post("/sessions", json={"session": "work"})
    r = client.post("/sessions", json={"session": "work"})
    assert r.status_code == 400


def test_add_table_reports_shape(client):
    doc = add_flights(client)
    assert doc["row_count"] == 6
    assert column_names(doc) == ["Date", "Src", "Delay"]
    assert doc["revision"] == 1


def test_default_session_is_preseeded(client):
    add_flights(client)
    doc = make_view(client, "SFO")
    assert doc["session"] == "default"


# ---- views ----

def test_create_view_returns_data(client):
    add_flights(client)
    doc = make_view(client, "SFO")
    assert doc["kind"] == "view"
    assert column_names(doc) == ["Date", "y"]
    assert sorted_rows(doc) == [(1, 10), (2, 15), (3, 20)]
    assert doc["canonical"] is True


def test_list_views_omits_rows(client):
    add_flights(client)
    make_view(client, "SFO")
    make_view(client, "OAK")
    doc = client.get("/views").json()
    assert len(doc["views"]) == 2
    assert all("rows" not in v for v in doc["views"])


def test_view_data_endpoint(client):
    add_flights(client)
    vid = make_view(client, "SFO")["id"]
    doc = client.get(f"/views/{vid}/data").json()
    assert sorted_rows(doc) == [(1, 10), (2, 15), (3, 20)]


def test_view_validation_errors(client):
    add_flights(client)
    r = client.post("/views", json={"table": "nope", "group": ["Date"],
                                    "agg": {"func": "avg", "attr": "Delay"},
                                    "mark": "bar"})
    assert r.status_code == 404
    r = client.post("/views", json={"table": "flights"})
    assert r.status_code == 400
    assert r.json()["error"] == "validation"


def test_get_endpoints_do_not_bump_revision(client):
    add_flights(client)
    vid = make_view(client, "SFO")["id"]
    before = client.get("/sessions/default").json()["revision"]
    client.get("/views")
    client.get(f"/views/{vid}/data")
    client.post("/safety", json={"left": vid, "right": vid})
    assert client.get("/sessions/default").json()["revision"] == before


# ---- safety ----

def test_safety_verdict_payload(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    right = make_view(client, "OAK")["id"]
    doc = client.post("/safety", json={"left": left, "right": right}).json()
    assert doc["status"] == "Safe"
    assert doc["relationship"] == "Exact"
    assert doc["matched"] == [["Date", "Date"]]


def test_safety_rejection_is_reported_not_raised(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    right = make_view(client, "OAK", agg={"func": "count", "attr": "Delay"})["id"]
    r = client.post("/safety", json={"left": left, "right": right})
    assert r.status_code == 200
    assert r.json()["status"] == "Rejected"


def test_safety_constant_operand(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    doc = client.post("/safety", json={"left": left, "right": 20}).json()
    assert doc["status"] == "Safe"
    assert doc["relationship"] == "Scalar"


# ---- composition ----

def test_compose_difference_returns_rows(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    right = make_view(client, "OAK")["id"]
    doc = client.post("/compose", json={"left": left, "right": right, "op": "-"}).json()
    assert sorted_rows(doc) == [(1, -5), (2, 5), (3, 15)]
    assert doc["title"] == "SFO - OAK"


def test_compose_default_op_is_difference(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    right = make_view(client, "OAK")["id"]
    doc = client.post("/compose", json={"left": left, "right": right}).json()
    assert sorted_rows(doc) == [(1, -5), (2, 5), (3, 15)]


def test_compose_constant_operand(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    doc = client.post("/compose", json={"left": left, "right": 20, "op": "-"}).json()
    assert sorted_rows(doc) == [(1, -10), (2, -5), (3, 0)]


def test_compose_labeled_constant(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    doc = client.post("/compose", json={
        "left": left, "right": {"const": {"value": 20, "label": "target"}},
        "op": "-",
    }).json()
    assert "target" in doc["title"]


def test_compose_rejected_maps_to_422(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    right = make_view(client, "OAK", agg={"func": "count", "attr": "Delay"})["id"]
    r = client.post("/compose", json={"left": left, "right": right, "op": "-"})
    assert r.status_code == 422
    doc = r.json()
    assert doc["error"] == "safety"
    assert doc["verdict"]["status"] == "Rejected"


def test_compose_union(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    right = make_view(client, "OAK")["id"]
    doc = client.post("/compose", json={"left": left, "right": right, "kind": "union"}).json()
    assert doc["canonical"] is True
    assert len(doc["rows"]) == 6
    assert column_names(doc) == ["Date", "qid", "y"]


def test_compose_legend_operand(client):
    add_flights(client)
    full = make_view(client, title="all", group=["Date", "Src"],
                     channels={"Date": "x", "Src": "color", "y": "y"})
    sfo = make_view(client, "SFO")["id"]
    doc = client.post("/compose", json={
        "left": sfo,
        "right": {"legend": {"view": full["id"], "attr": "Src", "value": "OAK"}},
        "op": "-",
    }).json()
    assert sorted_rows(doc) == [(1, -5), (2, 5), (3, 15)]


def test_compose_marks_operand(client):
    add_flights(client)
    sfo = make_view(client, "SFO")["id"]
    oak = make_view(client, "OAK")["id"]
    doc = client.post("/compose", json={
        "left": sfo,
        "right": {"marks": {"view": oak, "predicate": "Date in [1, 2]"}},
        "op": "-",
    }).json()
    assert sorted_rows(doc) == [(1, -5), (2, 5), (3, None)]


def test_compose_cell_operand(client):
    add_flights(client)
    sfo = make_view(client, "SFO")["id"]
    oak = make_view(client, "OAK")["id"]
    doc = client.post("/compose", json={
        "left": sfo,
        "right": {"cell": {"view": oak, "key": {"Date": 2}}},
        "op": "-",
    }).json()
    assert sorted_rows(doc) == [(1, 0), (2, 5), (3, 10)]


def test_compose_viewset_operand(client):
    add_flights(client)
    full = make_view(client, title="all", group=["Date", "Src"],
                     channels={"Date": "x", "Src": "color", "y": "y"})
    vs = client.post("/decompose", json={
        "view": full["id"], "kind": "explode", "args": {"attrs": ["Src"]},
    }).json()
    sfo = make_view(client, "SFO")["id"]
    doc = client.post("/compose", json={
        "left": {"viewset": vs["id"]}, "right": sfo, "op": "-",
    }).json()
    assert doc["kind"] == "viewset"
    assert len(doc["members"]) == 2


def test_compose_viewset_from_id_list(client):
    add_flights(client)
    sfo = make_view(client, "SFO")["id"]
    oak = make_view(client, "OAK")["id"]
    doc = client.post("/compose", json={
        "left": {"viewset": [sfo, oak]}, "right": 10, "op": "-",
    }).json()
    assert len(doc["members"]) == 2


def test_compose_override_flow(client):
    client.post("/sessions", json={"session": "money"})
    client.post("/sessions/money/tables", json={
        "name": "profits", "csv": "date,profits\n1,10\n2,12\n", "measure": "profits"})
    client.post("/sessions/money/tables", json={
        "name": "losses", "csv": "date,losses\n1,3\n2,5\n", "measure": "losses"})
    p = client.post("/views", json={
        "session": "money", "table": "profits", "group": ["date"],
        "agg": {"func": "avg", "attr": "profits"}, "mark": "bar"}).json()["id"]
    l = client.post("/views", json={
        "session": "money", "table": "losses", "group": ["date"],
        "agg": {"func": "avg", "attr": "losses"}, "mark": "bar"}).json()["id"]
    body = {"session": "money", "left": p, "right": l, "op": "-"}
    r = client.post("/compose", json=body)
    assert r.status_code == 422
    assert r.json()["verdict"]["status"] == "Overridable"
    r = client.post("/compose", json={**body, "override": True})
    assert r.status_code == 200
    assert sorted_rows(r.json()) == [(1, 7), (2, 7)]


def test_compose_bool_operand_rejected(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    r = client.post("/compose", json={"left": left, "right": True, "op": "-"})
    assert r.status_code == 400


def test_compose_unknown_id_is_404(client):
    add_flights(client)
    left = make_view(client, "SFO")["id"]
    r = client.post("/compose", json={"left": left, "right": "v999", "op": "-"})
    assert r.status_code == 404


# ---- decomposition and lifting ----

def test_decompose_extract(client):
    add_flights(client)
    vid = make_view(client, "SFO")["id"]
    doc = client.post("/decompose", json={
        "view": vid, "kind": "extract", "args": {"predicate": "Date > 1"},
    }).json()
    assert sorted_rows(doc) == [(2, 15), (3, 20)]


def test_decompose_explode_all_marks(client):
    add_flights(client)
    vid = make_view(client, "SFO")["id"]
    doc = client.post("/decompose", json={"view": vid, "kind": "explode"}).json()
    assert doc["kind"] == "viewset"
    assert len(doc["members"]) == 3


def test_decompose_unknown_kind(client):
    add_flights(client)
    vid = make_view(client, "SFO")["id"]
    r = client.post("/decompose", json={"view": vid, "kind": "melt"})
    assert r.status_code == 400


def test_lift_endpoint(client):
    add_flights(client)
    vid = make_view(client, "SFO")["id"]
    doc = client.post("/lift", json={"view": vid, "features": ["Date"]}).json()
    assert doc["kind"] == "model"
    (model,) = doc["models"]
    assert model["coefficients"] == pytest.approx([5.0, 5.0], abs=1e-8)
    assert len(doc["rows"]) == 20


def test_lift_then_compose_residuals(client):
    add_flights(client)
    vid = make_view(client, "SFO")["id"]
    mid = client.post("/lift", json={"view": vid, "features": ["Date"]}).json()["id"]
    doc = client.post("/compose", json={"left": vid, "right": mid, "op": "-"}).json()
    for row in doc["rows"]:
        assert abs(row[-1]) <= 1e-8


# ---- concurrency guard ----

def test_revision_pinning(client):
    add_flights(client)  # revision 1
    r = client.post("/sessions/default/tables", json={
        "name": "cars", "csv": CARS6_CSV, "measure": "mpg", "revision": 0})
    assert r.status_code == 409
    assert r.json()["revision"] == 1
    r = client.post("/sessions/default/tables", json={
        "name": "cars", "csv": CARS6_CSV, "measure": "mpg", "revision": 1})
    assert r.status_code == 200


def test_openapi_document(client):
    doc = client.get("/openapi.json").json()
    for path in ("/sessions", "/views", "/safety", "/compose", "/decompose", "/lift"):
        assert path in doc["paths"], path
