"""HTTP facade over a composition session.

The playground UI (or any client) creates a session, uploads CSV tables,
builds views, and then composes, decomposes and lifts them. Every
mutating response carries the new object's full JSON description plus its
data rows, so clients never re-derive state. Safety rejections map to
422 with the verdict attached; unknown names to 404; malformed requests
to 400. Mutations within one session are serialized, and a request may
pin the revision it saw: a stale revision is refused with 409.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field as dc_field
from datetime import date
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, StrictFloat, StrictInt

from . import algebra
from .dsl import parse_predicate
from .errors import (
    CatalogError, ConfigError, OperandError, SafetyError, UnboundNameError,
    UnsupportedNodeError, VcaError,
)
from .lift import ModelView, lift as lift_view, sample_model_view
from .relation import Catalog, Relation, ingest_csv
from .safety import OperatorKind, check_compose
from .view import (
    ConstantView, View, ViewSet, cell_operand, constant_operand,
    legend_operand, make_view, marks_operand, next_id,
)

DEFAULT_SESSION = "default"


class RevisionConflict(VcaError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"session moved on: revision is {expected}, request pinned {got}")
        self.expected = expected


@dataclass
class ApiSession:
    id: str
    catalog: Catalog = dc_field(default_factory=Catalog)
    objects: dict[str, Any] = dc_field(default_factory=dict)
    revision: int = 0
    lock: threading.Lock = dc_field(default_factory=threading.Lock)

    def lookup(self, object_id: str):
        try:
            return self.objects[object_id]
        except KeyError:
            raise UnboundNameError(f"no view, model or view set named {object_id!r}")

    def store(self, obj) -> str:
        if isinstance(obj, ViewSet):
            object_id = next_id("s")
        else:
            object_id = obj.id
        self.objects[object_id] = obj
        return object_id


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, ApiSession] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self.create(DEFAULT_SESSION)

    def create(self, session_id: str | None = None) -> ApiSession:
        with self._lock:
            if session_id is None:
                self._counter += 1
                session_id = f"session-{self._counter}"
            if session_id in self._sessions:
                raise ConfigError(f"session {session_id!r} already exists")
            s = ApiSession(session_id)
            self._sessions[session_id] = s
            return s

    def get(self, session_id: str | None) -> ApiSession:
        sid = session_id or DEFAULT_SESSION
        try:
            return self._sessions[sid]
        except KeyError:
            raise UnboundNameError(f"no session named {sid!r}")

    def drop(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise UnboundNameError(f"no session named {session_id!r}")
            del self._sessions[session_id]


# ---------------------------------------------------------------------------
# request bodies

class SessionBody(BaseModel):
    session: str | None = None


class TableBody(BaseModel):
    name: str
    csv: str
    measure: str | None = None
    revision: int | None = None


class AggBody(BaseModel):
    func: str
    attr: str


class ViewBody(BaseModel):
    session: str | None = None
    table: str
    group: list[str]
    agg: AggBody
    mark: str
    filter: str | None = None
    channels: dict[str, str] | None = None
    title: str = ""
    revision: int | None = None


# strict numbers keep JSON booleans from sneaking in as constants
Operand = str | StrictInt | StrictFloat | dict


class ComposeBody(BaseModel):
    session: str | None = None
    left: Operand
    right: Operand
    op: str | None = None
    kind: str | None = None  # stat (default) or union
    override: bool = False
    revision: int | None = None


class DecomposeBody(BaseModel):
    session: str | None = None
    view: str
    kind: str  # extract or explode
    args: dict = {}
    revision: int | None = None


class LiftBody(BaseModel):
    session: str | None = None
    view: str
    features: list[str]
    cond: list[str] = []
    revision: int | None = None


class SafetyBody(BaseModel):
    session: str | None = None
    left: Operand
    right: Operand
    kind: str | None = None


# ---------------------------------------------------------------------------
# JSON helpers

def json_value(v):
    if isinstance(v, date):
        return v.isoformat()
    return v


def rows_json(rel: Relation) -> dict:
    return {
        "columns": [
            {"name": a.name, "role": a.role.value, "kind": a.kind.value}
            for a in rel.schema.attrs
        ],
        "rows": [[json_value(v) for v in row] for row in rel.rows],
    }


def describe(obj, object_id: str | None = None, include_data: bool = True) -> dict:
    if isinstance(obj, View):
        doc = {"kind": "view", **obj.to_json()}
        if include_data:
            doc.update(rows_json(obj.result()))
        return doc
    if isinstance(obj, ModelView):
        doc = {"kind": "model", **obj.to_json()}
        if include_data:
            doc.update(rows_json(sample_model_view(obj)))
        return doc
    if isinstance(obj, ViewSet):
        return {
            "kind": "viewset",
            "id": object_id,
            "members": [describe(v, include_data=include_data) for v in obj],
        }
    if isinstance(obj, ConstantView):
        return {"kind": "const", "id": obj.id, "value": obj.value, "label": obj.label}
    raise UnsupportedNodeError(f"cannot describe {type(obj).__name__}")


def resolve_operand(s: ApiSession, spec) -> object:
    if isinstance(spec, str):
        return s.lookup(spec)
    if isinstance(spec, bool):
        raise OperandError("a constant operand must be a number")
    if isinstance(spec, (int, float)):
        return constant_operand(spec)
    if not isinstance(spec, dict) or len(spec) != 1:
        raise OperandError(
            "operand must be an id, a number, or one of "
            "{view}, {const}, {legend}, {marks}, {cell}, {viewset}"
        )
    key, val = next(iter(spec.items()))
    if key == "view":
        obj = s.lookup(val)
        if not isinstance(obj, (View, ModelView)):
            raise OperandError(f"{val!r} is not a view")
        return obj
    if key == "const":
        if isinstance(val, dict):
            return constant_operand(val.get("value"), val.get("label"))
        return constant_operand(val)
    if key == "legend":
        view = _view_of(s, val.get("view"))
        return legend_operand(view, val["attr"], _coerce(view, val["attr"], val.get("value")))
    if key == "marks":
        return marks_operand(_view_of(s, val.get("view")), parse_predicate(val["predicate"]))
    if key == "cell":
        view = _view_of(s, val.get("view"))
        key_vals = {a: _coerce(view, a, v) for a, v in val["key"].items()}
        return cell_operand(view, key_vals)
    if key == "viewset":
        if isinstance(val, str):
            obj = s.lookup(val)
            if not isinstance(obj, ViewSet):
                raise OperandError(f"{val!r} is not a view set")
            return obj
        members = []
        for vid in val:
            members.append(_view_of(s, vid))
        return ViewSet(tuple(members))
    raise OperandError(f"unknown operand form {key!r}")


def _view_of(s: ApiSession, view_id) -> View:
    obj = s.lookup(view_id)
    if not isinstance(obj, View):
        raise OperandError(f"{view_id!r} is not a view")
    return obj


def _coerce(view: View, attr: str, value):
    # JSON carries dates as ISO strings; turn them back for temporal columns
    if isinstance(value, str):
        schema = view.schema()
        if schema.has(attr) and schema.attr(attr).kind.value == "temporal":
            try:
                return date.fromisoformat(value)
            except ValueError:
                raise OperandError(f"{value!r} is not an ISO date for {attr!r}")
    return value


def _mutating(s: ApiSession, pinned: int | None):
    if pinned is not None and pinned != s.revision:
        raise RevisionConflict(s.revision, pinned)


# ---------------------------------------------------------------------------
# app factory

def create_app() -> FastAPI:
    app = FastAPI(
        title="view composition service",
        version="0.1.0",
        description="Build, type-check, compose, decompose and lift views over a session catalog.",
    )
    # the playground is served from its own origin during development
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore()
    app.state.store = store

    @app.exception_handler(SafetyError)
    async def _safety(request: Request, exc: SafetyError):
        payload = {"error": "safety", "message": str(exc)}
        if exc.verdict is not None:
            payload["verdict"] = exc.verdict.to_json()
        return JSONResponse(status_code=422, content=payload)

    @app.exception_handler(UnboundNameError)
    async def _unbound(request: Request, exc: UnboundNameError):
        return JSONResponse(status_code=404, content={"error": "not_found", "message": str(exc)})

    @app.exception_handler(CatalogError)
    async def _catalog(request: Request, exc: CatalogError):
        return JSONResponse(status_code=404, content={"error": "not_found", "message": str(exc)})

    @app.exception_handler(RevisionConflict)
    async def _conflict(request: Request, exc: RevisionConflict):
        return JSONResponse(
            status_code=409,
            content={"error": "revision_conflict", "message": str(exc), "revision": exc.expected},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "validation", "message": str(exc.errors())},
        )

    @app.exception_handler(VcaError)
    async def _domain(request: Request, exc: VcaError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.post("/sessions")
    def create_session(body: SessionBody | None = None):
        s = store.create(body.session if body else None)
        return {"session": s.id, "revision": s.revision}

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        store.drop(session_id)

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        s = store.get(session_id)
        return {
            "session": s.id,
            "revision": s.revision,
            "tables": s.catalog.names(),
            "objects": sorted(s.objects),
        }

    @app.post("/sessions/{session_id}/tables")
    def add_table(session_id: str, body: TableBody):
        s = store.get(session_id)
        with s.lock:
            _mutating(s, body.revision)
            roles = {body.measure: "measure"} if body.measure else {}
            text = body.csv if "\n" in body.csv else body.csv + "\n"
            rel = ingest_csv(text, roles)
            s.catalog.add(body.name, rel)
            s.revision += 1
            return {
                "session": s.id,
                "revision": s.revision,
                "table": body.name,
                "row_count": len(rel.rows),
                "columns": rows_json(rel)["columns"],
            }

    @app.post("/views")
    def create_view(body: ViewBody):
        s = store.get(body.session)
        with s.lock:
            _mutating(s, body.revision)
            predicate = parse_predicate(body.filter) if body.filter else None
            view = make_view(
                s.catalog, body.table, predicate, body.group,
                (body.agg.func, body.agg.attr), body.mark, body.channels,
                title=body.title,
            )
            s.store(view)
            s.revision += 1
            return {"session": s.id, "revision": s.revision, **describe(view)}

    @app.get("/views")
    def list_views(session: str | None = None):
        s = store.get(session)
        return {
            "session": s.id,
            "revision": s.revision,
            "views": [
                describe(obj, object_id=oid, include_data=False)
                for oid, obj in s.objects.items()
            ],
        }

    @app.get("/views/{view_id}/data")
    def view_data(view_id: str, session: str | None = None):
        s = store.get(session)
        return {"session": s.id, "revision": s.revision,
                **describe(s.lookup(view_id), object_id=view_id)}

    @app.post("/safety")
    def safety(body: SafetyBody):
        s = store.get(body.session)
        left = resolve_operand(s, body.left)
        right = resolve_operand(s, body.right)
        kind = OperatorKind(body.kind) if body.kind else OperatorKind.STAT
        verdict = check_compose(left, right, kind)
        return {"session": s.id, "revision": s.revision, **verdict.to_json()}

    @app.post("/compose")
    def compose(body: ComposeBody):
        s = store.get(body.session)
        with s.lock:
            _mutating(s, body.revision)
            left = resolve_operand(s, body.left)
            right = resolve_operand(s, body.right)
            wants_union = body.kind == "union" or body.op == "union"
            if wants_union:
                views = []
                for side in (left, right):
                    if isinstance(side, ViewSet):
                        views.extend(side)
                    elif isinstance(side, View):
                        views.append(side)
                    else:
                        raise OperandError("union combines views or view sets")
                result = algebra.union_nary(views)
            elif isinstance(left, ViewSet) or isinstance(right, ViewSet):
                result = algebra.viewset_cross(left, right, body.op, body.override)
            else:
                result = algebra.compose_pair(left, right, body.op, body.override)
            oid = s.store(result)
            s.revision += 1
            return {"session": s.id, "revision": s.revision, **describe(result, object_id=oid)}

    @app.post("/decompose")
    def decompose(body: DecomposeBody):
        s = store.get(body.session)
        with s.lock:
            _mutating(s, body.revision)
            view = _view_of(s, body.view)
            if body.kind == "extract":
                text = body.args.get("predicate")
                predicate = parse_predicate(text) if text else None
                result = algebra.extract(view, predicate)
            elif body.kind == "explode":
                attrs = body.args.get("attrs")
                if attrs is None:
                    result = algebra.marks_viewset(view)
                else:
                    result = algebra.explode(view, attrs)
            else:
                raise OperandError("decompose kind must be 'extract' or 'explode'")
            oid = s.store(result)
            s.revision += 1
            return {"session": s.id, "revision": s.revision, **describe(result, object_id=oid)}

    @app.post("/lift")
    def lift_endpoint(body: LiftBody):
        s = store.get(body.session)
        with s.lock:
            _mutating(s, body.revision)
            view = _view_of(s, body.view)
            model = lift_view(view, body.features, body.cond)
            oid = s.store(model)
            s.revision += 1
            return {"session": s.id, "revision": s.revision, **describe(model, object_id=oid)}

    return app


app = create_app()
