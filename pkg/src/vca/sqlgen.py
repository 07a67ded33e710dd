"""Compile plans to portable SQL.

The output sticks to a small ANSI subset: SELECT/WHERE/GROUP BY, INNER,
LEFT and FULL OUTER joins, UNION ALL, and literal rows for materialized
relations. Engines without FULL OUTER JOIN (sqlite among them) can pass
`emulate_full_outer=True` to get the equivalent rewrite as a LEFT JOIN
plus an anti-join over NOT EXISTS.

Division is emitted with a CAST to REAL so integer inputs divide the way
the in-memory evaluator divides. Model training has no SQL form.
"""

from __future__ import annotations

import math
import sqlite3
from dataclasses import dataclass
from datetime import date

from .errors import UnsupportedNodeError
from .expr import And, Arith, Attr, Cmp, Const, Expr, InRange, InSet, IsNull, Not, Or
from .plan import (
    Filter, GroupAgg, Join, JoinKind, ModelTrain, Plan, Project, Scan,
    UnionAll, Values, infer_schema,
)
from .relation import Catalog, Relation

AGG_SQL = {
    "avg": "AVG",
    "sum": "SUM",
    "min": "MIN",
    "max": "MAX",
    "count": "COUNT",
    "std": "STDDEV_POP",
}

JOIN_SQL = {
    JoinKind.INNER: "INNER JOIN",
    JoinKind.LEFT_OUTER: "LEFT JOIN",
    JoinKind.FULL_OUTER: "FULL OUTER JOIN",
}

CMP_SQL = {"=": "=", "!=": "<>", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def sql_literal(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise UnsupportedNodeError(f"non-finite literal {value!r} has no SQL form")
        return repr(value)
    if isinstance(value, date):
        return f"'{value.isoformat()}'"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    raise UnsupportedNodeError(f"literal {value!r} has no SQL form")


def expr_sql(e: Expr, qualifier: str | None = None) -> str:
    def walk(x: Expr) -> str:
        if isinstance(x, Attr):
            ident = quote_ident(x.name)
            return f"{qualifier}.{ident}" if qualifier else ident
        if isinstance(x, Const):
            return sql_literal(x.value)
        if isinstance(x, Cmp):
            return f"({walk(x.left)} {CMP_SQL[x.op]} {walk(x.right)})"
        if isinstance(x, And):
            return "(" + " AND ".join(walk(i) for i in x.items) + ")"
        if isinstance(x, Or):
            return "(" + " OR ".join(walk(i) for i in x.items) + ")"
        if isinstance(x, Not):
            return f"(NOT {walk(x.item)})"
        if isinstance(x, IsNull):
            return f"({walk(x.item)} IS NULL)"
        if isinstance(x, InSet):
            if not x.values:
                return "(1=0)"
            vals = ", ".join(sql_literal(v) for v in x.values)
            return f"({walk(x.item)} IN ({vals}))"
        if isinstance(x, InRange):
            return f"({walk(x.item)} BETWEEN {sql_literal(x.low)} AND {sql_literal(x.high)})"
        if isinstance(x, Arith):
            if x.op == "/":
                return f"(CAST({walk(x.left)} AS REAL) / {walk(x.right)})"
            return f"({walk(x.left)} {x.op} {walk(x.right)})"
        raise UnsupportedNodeError(f"expression {type(x).__name__} has no SQL form")

    return walk(e)


@dataclass
class _Source:
    clause: str  # ready for FROM
    where: str | None  # predicate already attached to the base table


class _Compiler:
    def __init__(self, catalog: Catalog, emulate_full_outer: bool):
        self.catalog = catalog
        self.emulate = emulate_full_outer
        self._n = 0

    def alias(self) -> str:
        self._n += 1
        return f"t{self._n}"

    def columns(self, plan: Plan) -> list[str]:
        return infer_schema(plan, self.catalog).names()

    def source(self, plan: Plan) -> _Source:
        # keep canonical shapes flat: a filtered scan becomes FROM t WHERE p
        if isinstance(plan, Scan):
            return _Source(quote_ident(plan.table), None)
        if isinstance(plan, Filter) and isinstance(plan.child, Scan):
            return _Source(quote_ident(plan.child.table), expr_sql(plan.predicate))
        return _Source(f"({self.compile(plan)}) AS {self.alias()}", None)

    def compile(self, plan: Plan) -> str:
        if isinstance(plan, Scan):
            cols = ", ".join(quote_ident(c) for c in self.columns(plan))
            return f"SELECT {cols} FROM {quote_ident(plan.table)}"
        if isinstance(plan, Filter):
            src = self.source(plan.child)
            cols = ", ".join(quote_ident(c) for c in self.columns(plan.child))
            where = expr_sql(plan.predicate)
            if src.where is not None:
                where = f"{src.where} AND {where}"
            return f"SELECT {cols} FROM {src.clause} WHERE {where}"
        if isinstance(plan, Project):
            src = self.source(plan.child)
            items = ", ".join(
                f"{expr_sql(i.expr)} AS {quote_ident(i.name)}" for i in plan.items
            )
            sql = f"SELECT {items} FROM {src.clause}"
            if src.where is not None:
                sql += f" WHERE {src.where}"
            return sql
        if isinstance(plan, GroupAgg):
            src = self.source(plan.child)
            agg = plan.agg
            parts = [quote_ident(g) for g in plan.group_attrs]
            parts.append(f"{AGG_SQL[agg.func]}({quote_ident(agg.attr)}) AS {quote_ident(agg.name)}")
            sql = f"SELECT {', '.join(parts)} FROM {src.clause}"
            if src.where is not None:
                sql += f" WHERE {src.where}"
            if plan.group_attrs:
                sql += " GROUP BY " + ", ".join(quote_ident(g) for g in plan.group_attrs)
            return sql
        if isinstance(plan, Join):
            return self._compile_join(plan)
        if isinstance(plan, UnionAll):
            order = self.columns(plan)
            members = []
            for child in plan.children:
                cols = ", ".join(quote_ident(c) for c in order)
                members.append(f"SELECT {cols} FROM ({self.compile(child)}) AS {self.alias()}")
            return "\nUNION ALL\n".join(members)
        if isinstance(plan, Values):
            return self._compile_values(plan.relation)
        if isinstance(plan, ModelTrain):
            raise UnsupportedNodeError("model training has no SQL form")
        raise UnsupportedNodeError(f"plan node {type(plan).__name__} has no SQL form")

    def _compile_values(self, rel: Relation) -> str:
        names = rel.schema.names()
        if not rel.rows:
            cols = ", ".join(f"NULL AS {quote_ident(c)}" for c in names)
            return f"SELECT {cols} WHERE (1=0)"
        selects = []
        for i, row in enumerate(rel.rows):
            if i == 0:
                cells = ", ".join(
                    f"{sql_literal(v)} AS {quote_ident(c)}" for v, c in zip(row, names)
                )
            else:
                cells = ", ".join(sql_literal(v) for v in row)
            selects.append(f"SELECT {cells}")
        return "\nUNION ALL\n".join(selects)

    def _compile_join(self, plan: Join) -> str:
        lcols = self.columns(plan.left)
        rcols = self.columns(plan.right)
        lsql = self.compile(plan.left)
        rsql = self.compile(plan.right)
        la, ra = self.alias(), self.alias()
        keys = plan.keys
        on = " AND ".join(
            f"{la}.{quote_ident(k)} = {ra}.{quote_ident(k)}" for k in keys
        ) or "(1=1)"
        right_extra = [c for c in rcols if c not in keys]

        def out_list(key_side: str | None) -> str:
            # key_side picks where key columns are read from; None coalesces
            items = []
            for c in lcols:
                q = quote_ident(c)
                if c in keys:
                    if key_side is None:
                        items.append(f"COALESCE({la}.{q}, {ra}.{q}) AS {q}")
                    else:
                        items.append(f"{key_side}.{q} AS {q}")
                else:
                    items.append(f"{la}.{q} AS {q}")
            items.extend(f"{ra}.{quote_ident(c)} AS {quote_ident(c)}" for c in right_extra)
            return ", ".join(items)

        if plan.kind is JoinKind.FULL_OUTER and self.emulate:
            matched = (
                f"SELECT {out_list(la)} FROM ({lsql}) AS {la} "
                f"LEFT JOIN ({rsql}) AS {ra} ON {on}"
            )
            anti_items = []
            for c in lcols:
                q = quote_ident(c)
                if c in keys:
                    anti_items.append(f"{ra}.{q} AS {q}")
                else:
                    anti_items.append(f"NULL AS {q}")
            anti_items.extend(f"{ra}.{quote_ident(c)} AS {quote_ident(c)}" for c in right_extra)
            unmatched = (
                f"SELECT {', '.join(anti_items)} FROM ({rsql}) AS {ra} "
                f"WHERE NOT EXISTS (SELECT 1 FROM ({lsql}) AS {la} WHERE {on})"
            )
            return f"{matched}\nUNION ALL\n{unmatched}"

        key_side = None if plan.kind is JoinKind.FULL_OUTER else la
        return (
            f"SELECT {out_list(key_side)} FROM ({lsql}) AS {la} "
            f"{JOIN_SQL[plan.kind]} ({rsql}) AS {ra} ON {on}"
        )


def compile_plan(plan: Plan, catalog: Catalog, emulate_full_outer: bool = False) -> str:
    """Render `plan` as one SQL query against the catalog's table names."""
    return _Compiler(catalog, emulate_full_outer).compile(plan)


class _StdDevPop:
    """Population standard deviation, two-pass over collected values so the
    result matches the in-memory evaluator bit for bit where possible."""

    def __init__(self):
        self.values: list[float] = []

    def step(self, value):
        if value is not None:
            self.values.append(float(value))

    def finalize(self):
        if not self.values:
            return None
        n = len(self.values)
        mean = math.fsum(self.values) / n
        var = math.fsum((v - mean) ** 2 for v in self.values) / n
        return math.sqrt(var)


def _storage_value(value):
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, bool):
        return int(value)
    return value


def run_on_sqlite(plan: Plan, catalog: Catalog) -> tuple[list[str], list[tuple]]:
    """Execute a plan's SQL on an in-memory sqlite holding the catalog's
    tables. Dates are stored as ISO text, which preserves comparisons,
    grouping and joins. Returns (column names, rows)."""
    sql = compile_plan(plan, catalog, emulate_full_outer=True)
    conn = sqlite3.connect(":memory:")
    try:
        conn.create_aggregate("STDDEV_POP", 1, _StdDevPop)
        for name in catalog.names():
            rel = catalog[name]
            cols = ", ".join(quote_ident(c) for c in rel.schema.names())
            conn.execute(f"CREATE TABLE {quote_ident(name)} ({cols})")
            if rel.rows:
                marks = ", ".join("?" for _ in rel.schema.names())
                conn.executemany(
                    f"INSERT INTO {quote_ident(name)} VALUES ({marks})",
                    [tuple(_storage_value(v) for v in row) for row in rel.rows],
                )
        cur = conn.execute(sql)
        names = [d[0] for d in cur.description]
        return names, cur.fetchall()
    finally:
        conn.close()


def sqlite_value(value):
    """Normalize an engine value to what sqlite hands back, for comparisons."""
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, bool):
        return int(value)
    return value
