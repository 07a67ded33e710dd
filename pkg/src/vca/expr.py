"""Scalar expressions and predicates over relation rows.

Evaluation follows SQL three-valued logic: comparisons and arithmetic
involving Null yield Null, and a filter keeps a row only when its
predicate evaluates to exactly True. Division by zero yields Null.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Mapping, Union

from .errors import PlanTypeError


@dataclass(frozen=True)
class Attr:
    name: str


@dataclass(frozen=True)
class Const:
    value: object  # None | bool | int | float | str | date


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class And:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Not:
    item: "Expr"


@dataclass(frozen=True)
class IsNull:
    item: "Expr"


@dataclass(frozen=True)
class InSet:
    item: "Expr"
    values: tuple


@dataclass(frozen=True)
class InRange:
    item: "Expr"
    low: object
    high: object


@dataclass(frozen=True)
class Arith:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


Expr = Union[Attr, Const, Cmp, And, Or, Not, IsNull, InSet, InRange, Arith]

TRUE = Const(True)
FALSE = Const(False)

_CMP_OPS = {"=", "!=", "<", "<=", ">", ">="}
_ARITH_OPS = {"+", "-", "*", "/"}


def _comparable(a, b) -> bool:
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return True
    if isinstance(a, str) and isinstance(b, str):
        return True
    if isinstance(a, date) and isinstance(b, date):
        return True
    return False


def _compare(op: str, a, b):
    if a is None or b is None:
        return None
    if not _comparable(a, b):
        raise PlanTypeError(f"cannot compare {a!r} with {b!r}")
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise PlanTypeError(f"unknown comparison operator {op!r}")


def _numeric(v, op: str):
    if isinstance(v, bool):
        return int(v)
    if not isinstance(v, (int, float)):
        raise PlanTypeError(f"arithmetic {op!r} needs numeric operands, got {v!r}")
    return v


def eval_expr(expr: Expr, env: Mapping[str, object]):
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Attr):
        try:
            return env[expr.name]
        except KeyError:
            raise PlanTypeError(f"unknown attribute {expr.name!r}")
    if isinstance(expr, Cmp):
        return _compare(expr.op, eval_expr(expr.left, env), eval_expr(expr.right, env))
    if isinstance(expr, And):
        saw_null = False
        for item in expr.items:
            v = eval_expr(item, env)
            if v is False:
                return False
            if v is None:
                saw_null = True
        return None if saw_null else True
    if isinstance(expr, Or):
        saw_null = False
        for item in expr.items:
            v = eval_expr(item, env)
            if v is True:
                return True
            if v is None:
                saw_null = True
        return None if saw_null else False
    if isinstance(expr, Not):
        v = eval_expr(expr.item, env)
        return None if v is None else (not v)
    if isinstance(expr, IsNull):
        return eval_expr(expr.item, env) is None
    if isinstance(expr, InSet):
        if not expr.values:
            return False
        v = eval_expr(expr.item, env)
        if v is None:
            return None
        hit = False
        saw_null = False
        for cand in expr.values:
            if cand is None:
                saw_null = True
            elif _comparable(v, cand) and v == cand:
                hit = True
        if hit:
            return True
        return None if saw_null else False
    if isinstance(expr, InRange):
        v = eval_expr(expr.item, env)
        lo = _compare(">=", v, expr.low)
        hi = _compare("<=", v, expr.high)
        if lo is False or hi is False:
            return False
        if lo is None or hi is None:
            return None
        return True
    if isinstance(expr, Arith):
        a = eval_expr(expr.left, env)
        b = eval_expr(expr.right, env)
        if a is None or b is None:
            return None
        a = _numeric(a, expr.op)
        b = _numeric(b, expr.op)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            return None if b == 0 else a / b
        raise PlanTypeError(f"unknown arithmetic operator {expr.op!r}")
    raise PlanTypeError(f"unknown expression node {expr!r}")


def is_true(value) -> bool:
    return value is True


def rename_attrs(expr: Expr, names: Mapping[str, str]) -> Expr:
    """Rewrite attribute references; unknown names pass through."""
    if isinstance(expr, Attr):
        return Attr(names.get(expr.name, expr.name))
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, Cmp):
        return Cmp(expr.op, rename_attrs(expr.left, names), rename_attrs(expr.right, names))
    if isinstance(expr, And):
        return And(tuple(rename_attrs(i, names) for i in expr.items))
    if isinstance(expr, Or):
        return Or(tuple(rename_attrs(i, names) for i in expr.items))
    if isinstance(expr, Not):
        return Not(rename_attrs(expr.item, names))
    if isinstance(expr, IsNull):
        return IsNull(rename_attrs(expr.item, names))
    if isinstance(expr, InSet):
        return InSet(rename_attrs(expr.item, names), expr.values)
    if isinstance(expr, InRange):
        return InRange(rename_attrs(expr.item, names), expr.low, expr.high)
    if isinstance(expr, Arith):
        return Arith(expr.op, rename_attrs(expr.left, names), rename_attrs(expr.right, names))
    raise PlanTypeError(f"unknown expression node {expr!r}")


def expr_attrs(expr: Expr) -> frozenset[str]:
    if isinstance(expr, Attr):
        return frozenset([expr.name])
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Cmp):
        return expr_attrs(expr.left) | expr_attrs(expr.right)
    if isinstance(expr, (And, Or)):
        out: frozenset[str] = frozenset()
        for item in expr.items:
            out |= expr_attrs(item)
        return out
    if isinstance(expr, (Not, IsNull)):
        return expr_attrs(expr.item)
    if isinstance(expr, (InSet, InRange)):
        return expr_attrs(expr.item)
    if isinstance(expr, Arith):
        return expr_attrs(expr.left) | expr_attrs(expr.right)
    raise PlanTypeError(f"unknown expression node {expr!r}")


# ---- rendering (script syntax; the DSL parser reads this back) ----

_LEVEL_OR, _LEVEL_AND, _LEVEL_NOT, _LEVEL_CMP, _LEVEL_ADD, _LEVEL_MUL, _LEVEL_ATOM = range(7)


def format_value(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, date):
        return f"d'{v.isoformat()}'"
    return "'" + str(v).replace("'", "''") + "'"


def format_expr(expr: Expr) -> str:
    text, _ = _fmt(expr)
    return text


def _wrap(text: str, level: int, minimum: int) -> str:
    return f"({text})" if level < minimum else text


def _fmt(expr: Expr) -> tuple[str, int]:
    if isinstance(expr, Const):
        return format_value(expr.value), _LEVEL_ATOM
    if isinstance(expr, Attr):
        return expr.name, _LEVEL_ATOM
    if isinstance(expr, Cmp):
        lt, ll = _fmt(expr.left)
        rt, rl = _fmt(expr.right)
        return f"{_wrap(lt, ll, _LEVEL_ADD)} {expr.op} {_wrap(rt, rl, _LEVEL_ADD)}", _LEVEL_CMP
    if isinstance(expr, And):
        parts = [_wrap(*(_fmt(i)), minimum=_LEVEL_NOT) for i in expr.items]
        return " and ".join(parts), _LEVEL_AND
    if isinstance(expr, Or):
        parts = [_wrap(*(_fmt(i)), minimum=_LEVEL_AND) for i in expr.items]
        return " or ".join(parts), _LEVEL_OR
    if isinstance(expr, Not):
        if isinstance(expr.item, IsNull):
            it, il = _fmt(expr.item.item)
            return f"{_wrap(it, il, _LEVEL_ADD)} is not null", _LEVEL_CMP
        it, il = _fmt(expr.item)
        return f"not {_wrap(it, il, _LEVEL_CMP)}", _LEVEL_NOT
    if isinstance(expr, IsNull):
        it, il = _fmt(expr.item)
        return f"{_wrap(it, il, _LEVEL_ADD)} is null", _LEVEL_CMP
    if isinstance(expr, InSet):
        it, il = _fmt(expr.item)
        vals = ", ".join(format_value(v) for v in expr.values)
        return f"{_wrap(it, il, _LEVEL_ADD)} in {{{vals}}}", _LEVEL_CMP
    if isinstance(expr, InRange):
        it, il = _fmt(expr.item)
        return f"{_wrap(it, il, _LEVEL_ADD)} in [{format_value(expr.low)}, {format_value(expr.high)}]", _LEVEL_CMP
    if isinstance(expr, Arith):
        lt, ll = _fmt(expr.left)
        rt, rl = _fmt(expr.right)
        if expr.op in "+-":
            # right side of - needs parens at equal level: a - (b + c)
            rmin = _LEVEL_MUL if expr.op == "-" else _LEVEL_ADD
            return f"{_wrap(lt, ll, _LEVEL_ADD)} {expr.op} {_wrap(rt, rl, rmin)}", _LEVEL_ADD
        rmin = _LEVEL_ATOM if expr.op == "/" else _LEVEL_MUL
        return f"{_wrap(lt, ll, _LEVEL_MUL)} {expr.op} {_wrap(rt, rl, rmin)}", _LEVEL_MUL
    raise PlanTypeError(f"unknown expression node {expr!r}")
