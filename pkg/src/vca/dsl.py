"""A small scripting language for building and composing views.

Scripts are line-oriented: `load` brings a CSV table into the catalog,
`name = <expression>` binds a view, view set or model, `show` prints a
result and `emit_sql` prints the SQL a view's plan compiles to. The
printer and parser round-trip: parsing printed text yields the same
statements, so scripts can be regenerated from their parse.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, replace
from datetime import date
from typing import Callable, Sequence

from . import algebra
from .algebra import as_op, compose_pair, union_nary, viewset_cross
from .errors import (
    OperandError, ParseError, SHADOWED_NAME, UnboundNameError,
    UnsupportedNodeError,
)
from .expr import (
    And, Arith, Attr, Cmp, Const, Expr, format_expr, format_value, InRange,
    InSet, IsNull, Not, Or,
)
from .lift import ModelView, lift, sample_model_view
from .relation import Catalog, format_relation, ingest_csv
from .sqlgen import compile_plan
from .view import (
    ConstantView, View, ViewSet, cell_operand, constant_operand,
    legend_operand, make_view, marks_operand,
)

KEYWORDS = {
    "load", "from", "measure", "show", "emit_sql",
    "view", "union", "agg", "extract", "explode", "marks_of", "lift",
    "legend", "marks", "cell", "const", "override",
    "and", "or", "not", "is", "in", "null", "true", "false",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<date>d'(?:[^']|'')*')
  | (?P<string>'(?:[^']|'')*')
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>!=|<=|>=|[=<>()\[\]{},:+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT KEYWORD NUMBER STRING DATE OP NEWLINE EOF
    value: object
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    depth = 0  # newlines inside brackets continue the statement
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "newline":
            if depth == 0:
                tokens.append(Token("NEWLINE", "\n", line, col))
            line += 1
            col = 1
            pos = m.end()
            continue
        if kind not in ("ws", "comment"):
            if kind == "ident":
                tk = "KEYWORD" if raw in KEYWORDS else "IDENT"
                tokens.append(Token(tk, raw, line, col))
            elif kind == "number":
                value = float(raw) if ("." in raw or "e" in raw or "E" in raw) else int(raw)
                tokens.append(Token("NUMBER", value, line, col))
            elif kind == "string":
                tokens.append(Token("STRING", raw[1:-1].replace("''", "'"), line, col))
            elif kind == "date":
                body = raw[2:-1].replace("''", "'")
                try:
                    tokens.append(Token("DATE", date.fromisoformat(body), line, col))
                except ValueError:
                    raise ParseError(f"bad date literal {raw}", line, col)
            else:
                if raw in "([{":
                    depth += 1
                elif raw in ")]}":
                    depth = max(0, depth - 1)
                tokens.append(Token("OP", raw, line, col))
        col += m.end() - pos
        pos = m.end()
    tokens.append(Token("EOF", None, line, col))
    return tokens


# ---------------------------------------------------------------------------
# statement and expression nodes

@dataclass(frozen=True)
class VRef:
    name: str


@dataclass(frozen=True)
class VNum:
    value: float


@dataclass(frozen=True)
class VConst:
    value: float
    label: str | None = None


@dataclass(frozen=True)
class VView:
    table: str
    group: tuple[str, ...]
    agg: tuple[str, str]
    mark: str
    filter: Expr | None = None
    channels: tuple[tuple[str, str], ...] | None = None
    title: str | None = None


@dataclass(frozen=True)
class VBinary:
    op: str
    left: "VExpr"
    right: "VExpr"
    override: bool = False


@dataclass(frozen=True)
class VUnion:
    items: tuple["VExpr", ...]


@dataclass(frozen=True)
class VAggSet:
    func: str
    item: "VExpr"


@dataclass(frozen=True)
class VExtract:
    item: "VExpr"
    predicate: Expr | None = None


@dataclass(frozen=True)
class VExplode:
    item: "VExpr"
    attrs: tuple[str, ...]


@dataclass(frozen=True)
class VMarksOf:
    item: "VExpr"


@dataclass(frozen=True)
class VLift:
    item: "VExpr"
    features: tuple[str, ...]
    cond: tuple[str, ...] = ()


@dataclass(frozen=True)
class VLegend:
    item: "VExpr"
    attr: str
    value: object


@dataclass(frozen=True)
class VMarks:
    item: "VExpr"
    predicate: Expr


@dataclass(frozen=True)
class VCell:
    item: "VExpr"
    key: tuple[tuple[str, object], ...]


VExpr = object


@dataclass(frozen=True)
class SLoad:
    name: str
    path: str
    measure: str | None = None


@dataclass(frozen=True)
class SAssign:
    name: str
    value: VExpr


@dataclass(frozen=True)
class SShow:
    value: VExpr


@dataclass(frozen=True)
class SEmitSql:
    value: VExpr


Stmt = object


# ---------------------------------------------------------------------------
# parser

class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def error(self, message: str) -> ParseError:
        t = self.peek()
        return ParseError(message, t.line, t.col)

    def at_op(self, *ops: str) -> bool:
        t = self.peek()
        return t.kind == "OP" and t.value in ops

    def at_keyword(self, *words: str) -> bool:
        t = self.peek()
        return t.kind == "KEYWORD" and t.value in words

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise self.error(f"expected {op!r}")
        return self.next()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> str:
        t = self.peek()
        # contextual names: keywords double as plain identifiers where only
        # a name can appear (column called "view" and the like)
        if t.kind in ("IDENT", "KEYWORD"):
            self.next()
            return str(t.value)
        raise self.error(f"expected {what}")

    def skip_newlines(self):
        while self.peek().kind == "NEWLINE":
            self.next()

    # -- statements

    def parse_script(self) -> list[Stmt]:
        stmts = []
        self.skip_newlines()
        while self.peek().kind != "EOF":
            stmts.append(self.parse_statement())
            t = self.peek()
            if t.kind not in ("NEWLINE", "EOF"):
                raise self.error("expected end of statement")
            self.skip_newlines()
        return stmts

    def parse_statement(self) -> Stmt:
        t = self.peek()
        if t.kind == "KEYWORD" and t.value == "load":
            return self.parse_load()
        if t.kind == "KEYWORD" and t.value == "show":
            self.next()
            return SShow(self.parse_vexpr())
        if t.kind == "KEYWORD" and t.value == "emit_sql":
            self.next()
            return SEmitSql(self.parse_vexpr())
        if t.kind == "IDENT" and self.tokens[self.pos + 1].kind == "OP" \
                and self.tokens[self.pos + 1].value == "=":
            name = str(self.next().value)
            self.next()  # =
            return SAssign(name, self.parse_vexpr())
        raise self.error("expected a statement (load, show, emit_sql or name = expression)")

    def parse_load(self) -> SLoad:
        self.expect_keyword("load")
        name = self.expect_ident("table name")
        self.expect_keyword("from")
        t = self.peek()
        if t.kind != "STRING":
            raise self.error("expected a quoted file path")
        path = str(self.next().value)
        measure = None
        if self.at_keyword("measure"):
            self.next()
            measure = self.expect_ident("measure attribute")
        return SLoad(name, path, measure)

    # -- view expressions

    def parse_vexpr(self) -> VExpr:
        node = self.parse_vsum()
        if self.at_keyword("override"):
            tok = self.next()
            if not isinstance(node, VBinary):
                raise ParseError("override applies to a composition", tok.line, tok.col)
            node = replace(node, override=True)
        return node

    def parse_vsum(self) -> VExpr:
        node = self.parse_vprod()
        while self.at_op("+", "-"):
            op = str(self.next().value)
            node = VBinary(op, node, self.parse_vprod())
        return node

    def parse_vprod(self) -> VExpr:
        node = self.parse_vatom()
        while self.at_op("*", "/"):
            op = str(self.next().value)
            node = VBinary(op, node, self.parse_vatom())
        return node

    def parse_vatom(self) -> VExpr:
        t = self.peek()
        if t.kind == "NUMBER":
            self.next()
            return VNum(t.value)
        if self.at_op("-"):
            self.next()
            n = self.peek()
            if n.kind != "NUMBER":
                raise self.error("expected a number after unary -")
            self.next()
            return VNum(-n.value)
        if self.at_op("("):
            self.next()
            node = self.parse_vexpr()
            self.expect_op(")")
            return node
        if t.kind == "KEYWORD":
            return self.parse_call()
        if t.kind == "IDENT":
            self.next()
            return VRef(str(t.value))
        raise self.error("expected a view expression")

    def parse_call(self) -> VExpr:
        t = self.next()
        head = str(t.value)
        if head == "view":
            return self.parse_view_call()
        self.expect_op("(")
        node: VExpr
        if head == "union":
            items = [self.parse_vexpr()]
            while self.at_op(","):
                self.next()
                items.append(self.parse_vexpr())
            node = VUnion(tuple(items))
        elif head == "agg":
            func = self.expect_ident("aggregate name")
            self.expect_op(",")
            node = VAggSet(func, self.parse_vexpr())
        elif head == "extract":
            item = self.parse_vexpr()
            pred = None
            if self.at_op(","):
                self.next()
                pred = self.parse_predicate()
            node = VExtract(item, pred)
        elif head == "explode":
            item = self.parse_vexpr()
            self.expect_op(",")
            node = VExplode(item, tuple(self.parse_name_list()))
        elif head == "marks_of":
            node = VMarksOf(self.parse_vexpr())
        elif head == "lift":
            item = self.parse_vexpr()
            self.expect_op(",")
            kw = self.expect_ident()
            if kw != "features":
                raise self.error("lift needs features: [..]")
            self.expect_op(":")
            features = tuple(self.parse_name_list())
            cond: tuple[str, ...] = ()
            if self.at_op(","):
                self.next()
                kw = self.expect_ident()
                if kw != "cond":
                    raise self.error("expected cond: [..]")
                self.expect_op(":")
                cond = tuple(self.parse_name_list())
            node = VLift(item, features, cond)
        elif head == "legend":
            item = self.parse_vexpr()
            self.expect_op(",")
            attr = self.expect_ident("attribute")
            self.expect_op(",")
            node = VLegend(item, attr, self.parse_literal())
        elif head == "marks":
            item = self.parse_vexpr()
            self.expect_op(",")
            node = VMarks(item, self.parse_predicate())
        elif head == "cell":
            item = self.parse_vexpr()
            self.expect_op(",")
            self.expect_op("{")
            pairs = []
            while not self.at_op("}"):
                attr = self.expect_ident("attribute")
                self.expect_op(":")
                pairs.append((attr, self.parse_literal()))
                if self.at_op(","):
                    self.next()
                else:
                    break
            self.expect_op("}")
            node = VCell(item, tuple(pairs))
        elif head == "const":
            t = self.peek()
            if self.at_op("-"):
                self.next()
                t = self.peek()
                if t.kind != "NUMBER":
                    raise self.error("expected a number")
                self.next()
                value = -t.value
            elif t.kind == "NUMBER":
                self.next()
                value = t.value
            else:
                raise self.error("expected a number")
            label = None
            if self.at_op(","):
                self.next()
                t = self.peek()
                if t.kind != "STRING":
                    raise self.error("expected a label string")
                self.next()
                label = str(t.value)
            node = VConst(value, label)
        else:
            raise ParseError(f"unknown call {head!r}", t.line, t.col)
        self.expect_op(")")
        return node

    def parse_view_call(self) -> VView:
        self.expect_op("(")
        table = self.expect_ident("table name")
        filter_ = None
        group: tuple[str, ...] | None = None
        agg: tuple[str, str] | None = None
        mark: str | None = None
        channels = None
        title = None
        while self.at_op(","):
            self.next()
            kw_tok = self.peek()
            kw = self.expect_ident("argument name")
            self.expect_op(":")
            if kw == "filter":
                filter_ = self.parse_predicate()
            elif kw == "group":
                group = tuple(self.parse_name_list())
            elif kw == "agg":
                func = self.expect_ident("aggregate name")
                self.expect_op("(")
                attr = self.expect_ident("attribute")
                self.expect_op(")")
                agg = (func, attr)
            elif kw == "mark":
                mark = self.expect_ident("mark type")
            elif kw == "channels":
                self.expect_op("{")
                pairs = []
                while not self.at_op("}"):
                    attr = self.expect_ident("attribute")
                    self.expect_op(":")
                    pairs.append((attr, self.expect_ident("channel")))
                    if self.at_op(","):
                        self.next()
                    else:
                        break
                self.expect_op("}")
                channels = tuple(pairs)
            elif kw == "title":
                t = self.peek()
                if t.kind != "STRING":
                    raise self.error("expected a title string")
                self.next()
                title = str(t.value)
            else:
                raise ParseError(f"unknown view argument {kw!r}", kw_tok.line, kw_tok.col)
        self.expect_op(")")
        if group is None or agg is None or mark is None:
            raise self.error("view(...) needs group, agg and mark arguments")
        return VView(table, group, agg, mark, filter_, channels, title)

    def parse_name_list(self) -> list[str]:
        self.expect_op("[")
        names = []
        while not self.at_op("]"):
            names.append(self.expect_ident("attribute"))
            if self.at_op(","):
                self.next()
            else:
                break
        self.expect_op("]")
        return names

    # -- predicates (the syntax format_expr prints)

    def parse_predicate(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        items = [self.parse_and()]
        while self.at_keyword("or"):
            self.next()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self) -> Expr:
        items = [self.parse_not()]
        while self.at_keyword("and"):
            self.next()
            items.append(self.parse_not())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_not(self) -> Expr:
        if self.at_keyword("not"):
            self.next()
            return Not(self.parse_not())
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        left = self.parse_additive()
        if self.at_keyword("is"):
            self.next()
            if self.at_keyword("not"):
                self.next()
                self.expect_keyword("null")
                return Not(IsNull(left))
            self.expect_keyword("null")
            return IsNull(left)
        if self.at_keyword("in"):
            self.next()
            if self.at_op("{"):
                self.next()
                values = []
                while not self.at_op("}"):
                    values.append(self.parse_literal())
                    if self.at_op(","):
                        self.next()
                    else:
                        break
                self.expect_op("}")
                return InSet(left, tuple(values))
            self.expect_op("[")
            low = self.parse_literal()
            self.expect_op(",")
            high = self.parse_literal()
            self.expect_op("]")
            return InRange(left, low, high)
        if self.at_op("=", "!=", "<", "<=", ">", ">="):
            op = str(self.next().value)
            return Cmp(op, left, self.parse_additive())
        return left

    def parse_additive(self) -> Expr:
        node = self.parse_mult()
        while self.at_op("+", "-"):
            op = str(self.next().value)
            node = Arith(op, node, self.parse_mult())
        return node

    def parse_mult(self) -> Expr:
        node = self.parse_unary()
        while self.at_op("*", "/"):
            op = str(self.next().value)
            node = Arith(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> Expr:
        if self.at_op("-"):
            self.next()
            t = self.peek()
            if t.kind != "NUMBER":
                raise self.error("expected a number after unary -")
            self.next()
            return Const(-t.value)
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        t = self.peek()
        if self.at_op("("):
            self.next()
            node = self.parse_or()
            self.expect_op(")")
            return node
        if t.kind in ("NUMBER", "STRING", "DATE"):
            self.next()
            return Const(t.value)
        if t.kind == "KEYWORD" and t.value in ("null", "true", "false"):
            self.next()
            return Const({"null": None, "true": True, "false": False}[str(t.value)])
        if t.kind == "IDENT":
            self.next()
            return Attr(str(t.value))
        raise self.error("expected a value or attribute")

    def parse_literal(self):
        t = self.peek()
        if self.at_op("-"):
            self.next()
            t = self.peek()
            if t.kind != "NUMBER":
                raise self.error("expected a number after unary -")
            self.next()
            return -t.value
        if t.kind in ("NUMBER", "STRING", "DATE"):
            self.next()
            return t.value
        if t.kind == "KEYWORD" and t.value in ("null", "true", "false"):
            self.next()
            return {"null": None, "true": True, "false": False}[str(t.value)]
        raise self.error("expected a literal")


def parse_script(text: str) -> list[Stmt]:
    return Parser(text).parse_script()


def parse_predicate(text: str) -> Expr:
    p = Parser(text)
    node = p.parse_predicate()
    if p.peek().kind != "EOF":
        raise p.error("trailing input after predicate")
    return node


# ---------------------------------------------------------------------------
# printer (the inverse of the parser)

_VLEVEL_SUM = 1
_VLEVEL_PROD = 2
_VLEVEL_ATOM = 3


def _vwrap(text: str, level: int, minimum: int) -> str:
    return f"({text})" if level < minimum else text


def _vfmt(node: VExpr) -> tuple[str, int]:
    if isinstance(node, VRef):
        return node.name, _VLEVEL_ATOM
    if isinstance(node, VNum):
        return format_value(node.value), _VLEVEL_ATOM
    if isinstance(node, VConst):
        if node.label is not None:
            return f"const({format_value(node.value)}, {_quote(node.label)})", _VLEVEL_ATOM
        return f"const({format_value(node.value)})", _VLEVEL_ATOM
    if isinstance(node, VBinary):
        lt, ll = _vfmt(node.left)
        rt, rl = _vfmt(node.right)
        own = _VLEVEL_SUM if node.op in "+-" else _VLEVEL_PROD
        text = f"{_vwrap(lt, ll, own)} {node.op} {_vwrap(rt, rl, own + 1)}"
        if node.override:
            # an overridden composition always prints parenthesized when nested
            return f"{text} override", 0
        return text, own
    if isinstance(node, VUnion):
        items = ", ".join(_vfmt(i)[0] for i in node.items)
        return f"union({items})", _VLEVEL_ATOM
    if isinstance(node, VAggSet):
        return f"agg({node.func}, {_vfmt(node.item)[0]})", _VLEVEL_ATOM
    if isinstance(node, VExtract):
        if node.predicate is None:
            return f"extract({_vfmt(node.item)[0]})", _VLEVEL_ATOM
        return f"extract({_vfmt(node.item)[0]}, {format_expr(node.predicate)})", _VLEVEL_ATOM
    if isinstance(node, VExplode):
        return f"explode({_vfmt(node.item)[0]}, [{', '.join(node.attrs)}])", _VLEVEL_ATOM
    if isinstance(node, VMarksOf):
        return f"marks_of({_vfmt(node.item)[0]})", _VLEVEL_ATOM
    if isinstance(node, VLift):
        text = f"lift({_vfmt(node.item)[0]}, features: [{', '.join(node.features)}]"
        if node.cond:
            text += f", cond: [{', '.join(node.cond)}]"
        return text + ")", _VLEVEL_ATOM
    if isinstance(node, VLegend):
        return (
            f"legend({_vfmt(node.item)[0]}, {node.attr}, {format_value(node.value)})",
            _VLEVEL_ATOM,
        )
    if isinstance(node, VMarks):
        return f"marks({_vfmt(node.item)[0]}, {format_expr(node.predicate)})", _VLEVEL_ATOM
    if isinstance(node, VCell):
        pairs = ", ".join(f"{a}: {format_value(v)}" for a, v in node.key)
        return f"cell({_vfmt(node.item)[0]}, {{{pairs}}})", _VLEVEL_ATOM
    if isinstance(node, VView):
        parts = [node.table]
        if node.filter is not None:
            parts.append(f"filter: {format_expr(node.filter)}")
        parts.append(f"group: [{', '.join(node.group)}]")
        parts.append(f"agg: {node.agg[0]}({node.agg[1]})")
        parts.append(f"mark: {node.mark}")
        if node.channels is not None:
            chans = ", ".join(f"{a}: {c}" for a, c in node.channels)
            parts.append(f"channels: {{{chans}}}")
        if node.title is not None:
            parts.append(f"title: {_quote(node.title)}")
        return f"view({', '.join(parts)})", _VLEVEL_ATOM
    raise TypeError(f"cannot print {node!r}")


def _quote(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def print_vexpr(node: VExpr) -> str:
    return _vfmt(node)[0]


def print_stmt(stmt: Stmt) -> str:
    if isinstance(stmt, SLoad):
        text = f"load {stmt.name} from {_quote(stmt.path)}"
        if stmt.measure:
            text += f" measure {stmt.measure}"
        return text
    if isinstance(stmt, SAssign):
        return f"{stmt.name} = {print_vexpr(stmt.value)}"
    if isinstance(stmt, SShow):
        return f"show {print_vexpr(stmt.value)}"
    if isinstance(stmt, SEmitSql):
        return f"emit_sql {print_vexpr(stmt.value)}"
    raise TypeError(f"cannot print {stmt!r}")


def print_script(stmts: Sequence[Stmt]) -> str:
    return "\n".join(print_stmt(s) for s in stmts) + "\n"


# ---------------------------------------------------------------------------
# evaluation

SERIES_DEFAULTS = ("color", "shape", "size", "column", "row", "detail")


def default_channels(group: Sequence[str], measure_name: str) -> dict[str, str]:
    channels = {}
    if group:
        channels[group[0]] = "x"
    channels[measure_name] = "y"
    extras = list(group[1:])
    for attr, channel in zip(extras, SERIES_DEFAULTS):
        channels[attr] = channel
    if len(extras) > len(SERIES_DEFAULTS):
        raise OperandError("too many grouping attributes to map automatically; pass channels")
    return channels


class Session:
    """Holds a catalog and named bindings while a script runs."""

    def __init__(self, catalog: Catalog | None = None, base_dir: str = ".",
                 out: Callable[[str], None] | None = None):
        self.catalog = catalog or Catalog()
        self.base_dir = base_dir
        self.bindings: dict[str, View | ViewSet | ModelView | ConstantView] = {}
        self.out = out or (lambda s: print(s))
        self.events: list[str] = []
        seed = os.environ.get("VCA_SEED")
        # evaluation is deterministic; the seed is recorded so runs that add
        # randomized tooling later can tie output back to it
        self.seed = int(seed) if seed else None

    def run(self, text: str) -> None:
        for stmt in parse_script(text):
            self.execute(stmt)

    def run_file(self, path: str) -> None:
        with open(path, encoding="utf-8") as fh:
            self.run(fh.read())

    def execute(self, stmt: Stmt) -> None:
        if isinstance(stmt, SLoad):
            full = stmt.path if os.path.isabs(stmt.path) else os.path.join(self.base_dir, stmt.path)
            roles = {stmt.measure: "measure"} if stmt.measure else {}
            if stmt.name in self.catalog:
                self.events.append(f"{SHADOWED_NAME}: table {stmt.name!r} reloaded")
            self.catalog.add(stmt.name, ingest_csv(full, roles))
            return
        if isinstance(stmt, SAssign):
            value = self.eval(stmt.value)
            if isinstance(value, View) and not value.title:
                value = replace(value, title=stmt.name)
            if stmt.name in self.bindings:
                self.events.append(f"{SHADOWED_NAME}: binding {stmt.name!r} reassigned")
            self.bindings[stmt.name] = value
            return
        if isinstance(stmt, SShow):
            self.show(self.eval(stmt.value))
            return
        if isinstance(stmt, SEmitSql):
            value = self.eval(stmt.value)
            for v in self._views_of(value):
                self.out(f"-- {v.display_title()}")
                self.out(compile_plan(v.plan, self.catalog) + ";")
            return
        raise TypeError(f"cannot execute {stmt!r}")

    def _views_of(self, value) -> list[View]:
        if isinstance(value, View):
            return [value]
        if isinstance(value, ViewSet):
            return list(value)
        raise UnsupportedNodeError("only views and view sets have a SQL form")

    def show(self, value) -> None:
        if isinstance(value, ViewSet):
            for member in value:
                self.show(member)
            return
        if isinstance(value, ModelView):
            self.out(f"== {value.display_title()} ==")
            for key, model in value.models:
                group = ", ".join(f"{a}={format_value(v)}" for a, v in zip(value.cond_attrs, key))
                coeffs = ", ".join(repr(c) for c in model.coefficients)
                label = f"[{group}] " if group else ""
                self.out(f"{label}coefficients: ({coeffs})  n={model.training_rows}")
            self.out(format_relation(sample_model_view(value), limit=10))
            return
        if isinstance(value, ConstantView):
            self.out(f"== {value.label or 'constant'} == {format_value(value.value)}")
            return
        self.out(f"== {value.display_title()} ==")
        for w in value.warnings:
            self.out(f"note [{w.code}]: {w.message}")
        self.out(format_relation(value.result()))

    # -- expression evaluation

    def eval(self, node: VExpr):
        if isinstance(node, VRef):
            try:
                return self.bindings[node.name]
            except KeyError:
                raise UnboundNameError(f"nothing named {node.name!r} is defined")
        if isinstance(node, VNum):
            return constant_operand(node.value)
        if isinstance(node, VConst):
            return constant_operand(node.value, node.label)
        if isinstance(node, VView):
            channels = dict(node.channels) if node.channels is not None else \
                default_channels(node.group, "y")
            return make_view(
                self.catalog, node.table, node.filter, node.group, node.agg,
                node.mark, channels, title=node.title or "",
            )
        if isinstance(node, VBinary):
            left = self.eval(node.left)
            right = self.eval(node.right)
            op = as_op(node.op)
            if isinstance(left, ViewSet) or isinstance(right, ViewSet):
                return viewset_cross(left, right, op, node.override)
            return compose_pair(left, right, op, node.override)
        if isinstance(node, VUnion):
            views: list[View] = []
            for item in node.items:
                value = self.eval(item)
                if isinstance(value, ViewSet):
                    views.extend(value)
                elif isinstance(value, View):
                    views.append(value)
                else:
                    raise OperandError("union combines views or view sets")
            return union_nary(views)
        if isinstance(node, VAggSet):
            value = self.eval(node.item)
            if not isinstance(value, ViewSet):
                raise OperandError("agg(f, ...) needs a view set operand")
            return algebra.viewset_stat(value, node.func)
        if isinstance(node, VExtract):
            return algebra.extract(self._one_view(node.item), node.predicate)
        if isinstance(node, VExplode):
            return algebra.explode(self._one_view(node.item), node.attrs)
        if isinstance(node, VMarksOf):
            return algebra.marks_viewset(self._one_view(node.item))
        if isinstance(node, VLift):
            return lift(self._one_view(node.item), node.features, node.cond)
        if isinstance(node, VLegend):
            return legend_operand(self._one_view(node.item), node.attr, node.value)
        if isinstance(node, VMarks):
            return marks_operand(self._one_view(node.item), node.predicate)
        if isinstance(node, VCell):
            return cell_operand(self._one_view(node.item), dict(node.key))
        raise TypeError(f"cannot evaluate {node!r}")

    def _one_view(self, node: VExpr) -> View:
        value = self.eval(node)
        if not isinstance(value, View):
            raise OperandError("this operator needs a single view operand")
        return value
