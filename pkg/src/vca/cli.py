"""Command line entry points: run a script or serve the HTTP API."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .dsl import Session
from .errors import UnsupportedNodeError, VcaError
from .lift import ModelView, sample_model_view
from .sqlgen import compile_plan
from .view import View, ViewSet


def _binding_json(name: str, value) -> dict:
    from .service import describe  # shares the JSON shape with the HTTP API
    return {"name": name, **describe(value, object_id=getattr(value, "id", name))}


def _run(args: argparse.Namespace) -> int:
    base_dir = os.path.dirname(os.path.abspath(args.script)) or "."
    session = Session(base_dir=base_dir)
    try:
        session.run_file(args.script)
    except VcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.emit_sql:
        for name, value in session.bindings.items():
            views = value if isinstance(value, ViewSet) else [value]
            for v in views:
                if isinstance(v, ModelView):
                    print(f"-- {name}: models have no SQL form")
                    continue
                print(f"-- {name}: {v.display_title()}")
                print(compile_plan(v.plan, session.catalog) + ";")
    if args.json_out:
        os.makedirs(args.json_out, exist_ok=True)
        for name, value in session.bindings.items():
            path = os.path.join(args.json_out, f"{name}.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(_binding_json(name, value), fh, indent=2)
    for event in session.events:
        print(f"note: {event}", file=sys.stderr)
    return 0


def _serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vca", description="view composition engine")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a .vca script")
    run_p.add_argument("script", help="path to the script file")
    run_p.add_argument("--emit-sql", action="store_true",
                       help="print SQL for every binding after the run")
    run_p.add_argument("--json-out", metavar="DIR",
                       help="write each binding as JSON into DIR")
    run_p.set_defaults(func=_run)

    serve_p = sub.add_parser("serve", help="serve the HTTP API")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8787)
    serve_p.set_defaults(func=_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
