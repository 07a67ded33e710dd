"""Safety typing for composition: when do two views combine meaningfully?

Measures are compatible when their output types are equal (a constant is
a wildcard that matches any numeric measure). Dimensions match by name:
equal sets compose exactly, a right side strictly contained in the left
composes via a left outer join, and an empty right side is a scalar.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from numbers import Number
from typing import Sequence, Union

from .errors import EMPTY_JOIN, Note
from .view import ConstantView, Measure, MeasureType, View, ViewSet, drop_unique_dims, measure_type_of


class Status(str, Enum):
    SAFE = "Safe"
    OVERRIDABLE = "Overridable"
    REJECTED = "Rejected"


class Relationship(str, Enum):
    EXACT = "Exact"
    LEFT_SUPERSET = "LeftSuperset"
    SCALAR = "Scalar"


class OperatorKind(str, Enum):
    STAT = "stat"
    UNION = "union"
    VIEWSET_STAT = "viewset_stat"
    VIEWSET_UNION = "viewset_union"


class MatchKind(str, Enum):
    EXACT = "exact"
    LEFT_SUPERSET = "left_superset"
    NO_MATCH = "no_match"


def schema_match(dims1: Sequence[str], dims2: Sequence[str]) -> MatchKind:
    """Compare grouping-attribute sets by name; order never matters."""
    s1, s2 = set(dims1), set(dims2)
    if s1 == s2:
        return MatchKind.EXACT
    if s2 < s1:
        return MatchKind.LEFT_SUPERSET
    return MatchKind.NO_MATCH


def measure_type(expr) -> MeasureType:
    """Type a measure expression: f(attr) pairs, a bare attribute, a
    Measure, or a numeric constant (wildcard)."""
    if isinstance(expr, Measure):
        return expr.mtype
    if isinstance(expr, MeasureType):
        return expr
    if isinstance(expr, tuple) and len(expr) == 2:
        return measure_type_of(expr[0], expr[1])
    if isinstance(expr, str):
        return measure_type_of(None, expr)
    if isinstance(expr, Number) and not isinstance(expr, bool):
        return MeasureType.wildcard()
    raise TypeError(f"cannot type measure expression {expr!r}")


@dataclass(frozen=True)
class SafetyVerdict:
    status: Status
    relationship: Relationship | None
    matched: tuple[tuple[str, str], ...]
    warnings: tuple[Note, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status is not Status.REJECTED

    def reason(self) -> str:
        for note in self.warnings:
            if note.code == "rejected":
                return note.message
        return self.status.value

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "relationship": self.relationship.value if self.relationship else None,
            "matched": [list(pair) for pair in self.matched],
            "warnings": [w.to_json() for w in self.warnings],
        }


def _rejected(message: str, *extra: Note) -> SafetyVerdict:
    return SafetyVerdict(Status.REJECTED, None, (), (Note("rejected", message),) + tuple(extra))


Operand = Union[View, ViewSet, ConstantView, "ModelView"]  # noqa: F821 (lift imports lazily)


def _is_model(operand) -> bool:
    from .lift import ModelView
    return isinstance(operand, ModelView)


def _operand_dims(operand) -> tuple[str, ...]:
    if _is_model(operand):
        return tuple(operand.cond_attrs) + tuple(operand.feature_attrs)
    return operand.group_attrs


def _operand_mtype(operand) -> MeasureType:
    if _is_model(operand):
        return operand.base.measure.mtype
    return operand.measure.mtype


def _overridable(t1: MeasureType, t2: MeasureType) -> bool:
    # domain knowledge can justify comparing two plain numeric measures,
    # but never a count against a statistic
    return t1.kind == "base" and t2.kind == "base" and t1.numeric and t2.numeric


def _pairs(attrs: Sequence[str]) -> tuple[tuple[str, str], ...]:
    return tuple((a, a) for a in sorted(attrs))


def check_compose(left, right, kind: OperatorKind | str = OperatorKind.STAT) -> SafetyVerdict:
    """Decide whether `left` composed with `right` under the given
    operator kind is Safe, Overridable (stat over mismatched numeric
    measures), or Rejected."""
    kind = OperatorKind(kind)

    if isinstance(left, ViewSet) or isinstance(right, ViewSet):
        return _check_sets(left, right, kind)

    if isinstance(left, ConstantView):
        return _rejected("a constant cannot be the left operand")

    if isinstance(right, ConstantView):
        if kind is not OperatorKind.STAT:
            return _rejected("constants only combine through statistical composition")
        return SafetyVerdict(Status.SAFE, Relationship.SCALAR, ())

    if _is_model(left) and _is_model(right):
        return _check_model_pair(left, right, kind)

    if kind is OperatorKind.STAT:
        return _check_stat_pair(left, right)
    return _check_exact_pair(left, right, kind)


def _check_stat_pair(left, right) -> SafetyVerdict:
    warnings: list[Note] = []
    right_dims = _operand_dims(right)
    if isinstance(right, View):
        reduced, dropped = drop_unique_dims(right)
        if dropped:
            right_dims = reduced.group_attrs
            warnings.extend(reduced.warnings[len(right.warnings):])
    left_dims = _operand_dims(left)

    t1, t2 = _operand_mtype(left), _operand_mtype(right)
    if not set(right_dims):
        rel = Relationship.SCALAR if set(left_dims) else Relationship.EXACT
    elif set(left_dims) == set(right_dims):
        rel = Relationship.EXACT
    elif set(right_dims) < set(left_dims):
        rel = Relationship.LEFT_SUPERSET
    else:
        return _rejected(
            f"grouping attributes do not match: left {sorted(left_dims)}, right {sorted(right_dims)}",
            *warnings,
        )

    matched = _pairs(right_dims if rel is not Relationship.SCALAR else ())
    if t1.compatible(t2):
        verdict = SafetyVerdict(Status.SAFE, rel, matched, tuple(warnings))
    elif rel is Relationship.EXACT and _overridable(t1, t2):
        note = Note("override", f"measures {t1.describe()} and {t2.describe()} differ; override to compose anyway")
        verdict = SafetyVerdict(Status.OVERRIDABLE, rel, matched, tuple(warnings) + (note,))
    else:
        return _rejected(
            f"incompatible measures: {t1.describe()} vs {t2.describe()}",
            *warnings,
        )
    join_note = _empty_join_note(left, right, matched, rel)
    if join_note is not None:
        verdict = SafetyVerdict(verdict.status, verdict.relationship, verdict.matched, verdict.warnings + (join_note,))
    return verdict


def _check_exact_pair(left, right, kind: OperatorKind) -> SafetyVerdict:
    if _is_model(left) or _is_model(right):
        return _rejected(f"model views do not take part in {kind.value} composition")
    t1, t2 = _operand_mtype(left), _operand_mtype(right)
    if schema_match(left.group_attrs, right.group_attrs) is not MatchKind.EXACT:
        return _rejected(
            f"{kind.value} requires identical grouping attributes: "
            f"left {sorted(left.group_attrs)}, right {sorted(right.group_attrs)}"
        )
    if not t1.compatible(t2):
        return _rejected(f"incompatible measures: {t1.describe()} vs {t2.describe()}")
    return SafetyVerdict(Status.SAFE, Relationship.EXACT, _pairs(left.group_attrs))


def _check_model_pair(left, right, kind: OperatorKind) -> SafetyVerdict:
    if kind is not OperatorKind.STAT:
        return _rejected("model views only combine through statistical composition")
    if set(left.feature_attrs) != set(right.feature_attrs) or set(left.cond_attrs) != set(right.cond_attrs):
        return _rejected(
            f"model views disagree on features or conditions: "
            f"({sorted(left.feature_attrs)} | {sorted(left.cond_attrs)}) vs "
            f"({sorted(right.feature_attrs)} | {sorted(right.cond_attrs)})"
        )
    t1, t2 = _operand_mtype(left), _operand_mtype(right)
    if not t1.compatible(t2):
        if _overridable(t1, t2):
            note = Note("override", f"measures {t1.describe()} and {t2.describe()} differ; override to compose anyway")
            return SafetyVerdict(Status.OVERRIDABLE, Relationship.EXACT, _pairs(_operand_dims(left)), (note,))
        return _rejected(f"incompatible measures: {t1.describe()} vs {t2.describe()}")
    return SafetyVerdict(Status.SAFE, Relationship.EXACT, _pairs(_operand_dims(left)))


def _check_sets(left, right, kind: OperatorKind) -> SafetyVerdict:
    lefts = list(left) if isinstance(left, ViewSet) else [left]
    rights = list(right) if isinstance(right, ViewSet) else [right]
    worst: SafetyVerdict | None = None
    for lv in lefts:
        for rv in rights:
            v = check_compose(lv, rv, kind)
            if v.status is Status.REJECTED:
                return v
            if worst is None or (worst.status is Status.SAFE and v.status is Status.OVERRIDABLE):
                worst = v
    assert worst is not None
    return worst


def _empty_join_note(left, right, matched: tuple[tuple[str, str], ...], rel: Relationship) -> Note | None:
    """Warn when a statistical composition will find no matching keys.
    Only data views can be probed; model operands are skipped."""
    if rel is Relationship.SCALAR or not matched:
        return None
    if not isinstance(left, View) or not isinstance(right, View):
        return None
    keys = [pair[0] for pair in matched]
    lres, rres = left.result(), right.result()
    if not lres.rows or not rres.rows:
        return Note(EMPTY_JOIN, "one side has no rows; composition will only produce unmatched rows")
    lkeys = {tuple(row[lres.schema.index(k)] for k in keys) for row in lres.rows}
    rkeys = {tuple(row[rres.schema.index(k)] for k in keys) for row in rres.rows}
    lkeys = {k for k in lkeys if None not in k}
    rkeys = {k for k in rkeys if None not in k}
    if lkeys and rkeys and not (lkeys & rkeys):
        return Note(EMPTY_JOIN, "no grouping keys overlap; every output row will be unmatched")
    return None
