"""Lifting views into per-group linear models and composing with them.

A lifted view fits one ordinary-least-squares model per condition group
over the view's aggregated output: features predict the measure. Models
compose with data views (predict, then combine measures row by row) and
with other models (predict both over a shared sample grid).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Sequence

from .algebra import BinaryOp, as_op, stat_binary
from .errors import (
    DEGENERATE_FIT, EmptyJoinError, EmptyModelError, Note, OperandError,
    PlanTypeError, SafetyError, UNMATCHED_ROWS,
)
from .expr import eval_expr
from .ols import predict
from .plan import EPOCH, ModelTrain, Values, as_feature_value, eval_plan
from .relation import AttributeDef, Kind, Relation, Role, Schema
from .safety import OperatorKind, Status, check_compose
from .view import Measure, View, next_id

SAMPLE_POINTS_PER_FEATURE = 20
SAMPLE_CAP = 1000


@dataclass(frozen=True)
class LinearModel:
    feature_attrs: tuple[str, ...]
    coefficients: tuple[float, ...]  # intercept first, then one per feature
    training_rows: int

    def predict(self, features: Sequence[float]) -> float:
        return predict(list(self.coefficients), list(features))


@dataclass(frozen=True)
class ModelView:
    id: str
    title: str
    base: View = field(repr=False)
    cond_attrs: tuple[str, ...]
    feature_attrs: tuple[str, ...]
    models: tuple[tuple[tuple, LinearModel], ...]  # (cond key, model), insertion order
    feature_domains: tuple[tuple[str, tuple], ...]  # (attr, (lo, hi))
    warnings: tuple[Note, ...] = ()

    def models_map(self) -> dict[tuple, LinearModel]:
        return dict(self.models)

    def domain_of(self, attr: str) -> tuple:
        for a, bounds in self.feature_domains:
            if a == attr:
                return bounds
        raise KeyError(attr)

    @property
    def mapping(self):
        keep = set(self.cond_attrs) | set(self.feature_attrs) | {self.base.measure.name}
        return self.base.mapping.restricted_to(sorted(keep))

    def display_title(self) -> str:
        return self.title or self.id

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.display_title(),
            "cond_attrs": list(self.cond_attrs),
            "features": list(self.feature_attrs),
            "models": [
                {"group": list(key), "coefficients": list(m.coefficients), "n": m.training_rows}
                for key, m in self.models
            ],
            "mark": self.base.mapping.mark.value,
            "channels": self.mapping.to_json(),
            "warnings": [w.to_json() for w in self.warnings],
        }


def lift(view: View, features: Sequence[str], cond: Sequence[str] = ()) -> ModelView:
    """Fit one linear model per `cond` group predicting the measure from
    `features`. Groups with too few usable rows (or collinear features)
    are omitted with a warning; no usable group at all is an error."""
    if not features:
        raise OperandError("lift needs at least one feature attribute")
    for a in list(features) + list(cond):
        if a not in view.group_attrs:
            raise OperandError(f"{a!r} is not a grouping attribute of {view.display_title()}")
    overlap = set(features) & set(cond)
    if overlap:
        raise OperandError(f"attributes cannot be both feature and condition: {sorted(overlap)}")

    result = view.result()
    for f in features:
        if result.schema.attr(f).kind is Kind.CATEGORICAL:
            raise PlanTypeError(f"model feature {f!r} must be quantitative")

    train = ModelTrain(view.plan, tuple(cond), tuple(features), view.measure.name)
    fitted = eval_plan(train, view.catalog)
    k = len(features)
    models = []
    for row in fitted.rows:
        key = row[:len(cond)]
        coeffs = row[len(cond):len(cond) + k + 1]
        n = row[len(cond) + k + 1]
        models.append((key, LinearModel(tuple(features), tuple(float(c) for c in coeffs), int(n))))

    warnings: list[Note] = []
    cidx = [result.schema.index(c) for c in cond]
    seen_keys = []
    for row in result.rows:
        key = tuple(row[i] for i in cidx)
        if key not in seen_keys:
            seen_keys.append(key)
    fitted_keys = {key for key, _ in models}
    omitted = [key for key in seen_keys if key not in fitted_keys]
    if omitted:
        shown = ", ".join(str(k) for k in omitted)
        warnings.append(Note(DEGENERATE_FIT, f"no determined fit for groups: {shown}; omitted"))
    if not models:
        raise EmptyModelError(f"no group of {view.display_title()} yields a determined linear model")

    domains = []
    for f in features:
        values = [v for v in result.column(f) if v is not None]
        domains.append((f, (min(values), max(values))))

    return ModelView(
        id=next_id("m"),
        title=f"model({view.display_title()} ~ {', '.join(features)})",
        base=view,
        cond_attrs=tuple(cond),
        feature_attrs=tuple(features),
        models=tuple(models),
        feature_domains=tuple(domains),
        warnings=tuple(warnings),
    )


def _grid_points_per_feature(k: int) -> int:
    # start from the stock count and scale down until the full grid fits
    n = SAMPLE_POINTS_PER_FEATURE
    while n > 1 and n ** k > SAMPLE_CAP:
        n -= 1
    return n


def _feature_axis(bounds: tuple, n: int) -> list:
    lo, hi = bounds
    temporal = isinstance(lo, date)
    lo_f = as_feature_value(lo)
    hi_f = as_feature_value(hi)
    if lo_f == hi_f:
        values = [lo_f]
    else:
        step = (hi_f - lo_f) / (n - 1)
        values = [lo_f + i * step for i in range(n)]
    if temporal:
        days = []
        for v in values:
            d = round(v)
            if d not in days:
                days.append(d)
        return [EPOCH + timedelta(days=d) for d in days]
    return values


def sample_model_view(mv: ModelView) -> Relation:
    """Evaluate every model over an equi-distant grid of the feature
    domains: 20 points per feature, scaled down so the grid never exceeds
    1000 rows."""
    n = _grid_points_per_feature(len(mv.feature_attrs))
    axes = [_feature_axis(mv.domain_of(f), n) for f in mv.feature_attrs]
    base_schema = mv.base.result().schema
    attrs = [base_schema.attr(c) for c in mv.cond_attrs]
    for f in mv.feature_attrs:
        src = base_schema.attr(f)
        attrs.append(AttributeDef(f, Role.DIMENSION, src.kind))
    y_name = mv.base.measure.name
    attrs.append(AttributeDef(y_name, Role.MEASURE, Kind.NUMERIC))

    rows = []
    for key, model in mv.models:
        for point in itertools.product(*axes):
            feats = [as_feature_value(p) for p in point]
            rows.append(key + tuple(point) + (model.predict(feats),))
    return Relation(Schema(tuple(attrs)), tuple(rows))


def _prediction_view(data: View, mv: ModelView) -> tuple[View, int]:
    """Predict the model's measure for every row of `data`, joined on the
    condition attributes. Returns the prediction view and how many rows
    had no model to match."""
    result = data.result()
    cidx = [result.schema.index(c) for c in mv.cond_attrs]
    fidx = [result.schema.index(f) for f in mv.feature_attrs]
    models = mv.models_map()

    # every data row keeps a slot so the grouping attributes line up
    # exactly with the data view; rows without a model predict Null
    out_rows = []
    unmatched = 0
    gidx = [result.schema.index(g) for g in data.group_attrs]
    for row in result.rows:
        key = tuple(row[i] for i in cidx)
        model = models.get(key)
        pred_y = None
        if model is None or any(row[i] is None for i in fidx):
            unmatched += 1
        else:
            feats = [as_feature_value(row[i]) for i in fidx]
            pred_y = model.predict(feats)
        out_rows.append(tuple(row[i] for i in gidx) + (pred_y,))
    if unmatched == len(out_rows):
        raise EmptyJoinError(
            f"no rows of {data.display_title()} match a model group of {mv.display_title()}"
        )

    attrs = [result.schema.attr(g) for g in data.group_attrs]
    y_name = data.measure.name
    attrs.append(AttributeDef(y_name, Role.MEASURE, Kind.NUMERIC))
    rel = Relation(Schema(tuple(attrs)), tuple(out_rows))
    pred = View(
        id=next_id(),
        title=mv.display_title(),
        plan=Values(rel),
        group_attrs=data.group_attrs,
        measure=Measure(None, None, mv.base.measure.mtype, y_name),
        mapping=data.mapping,
        canonical=False,
        catalog=data.catalog,
        source_table=None,
    )
    return pred, unmatched


def _unmatched_note(count: int) -> Note:
    return Note(UNMATCHED_ROWS, f"{count} row(s) had no matching model group and were left out of the prediction")


def _checked_verdict(left, right, override: bool):
    verdict = check_compose(left, right, OperatorKind.STAT)
    if verdict.status is Status.REJECTED:
        raise SafetyError(verdict.reason(), verdict)
    if verdict.status is Status.OVERRIDABLE and not override:
        raise SafetyError("measures differ; pass override=True to compose anyway", verdict)
    return verdict


def compose_view_model(view: View, mv: ModelView, op: BinaryOp | str | None = None,
                       override: bool = False) -> View:
    """Combine a view with a model's predictions for that view's rows."""
    op = as_op(op)
    _checked_verdict(view, mv, override)
    pred, unmatched = _prediction_view(view, mv)
    out = stat_binary(view, pred, op, override)
    if unmatched:
        out = out.with_warnings(_unmatched_note(unmatched))
    return out


def compose_model_view(mv: ModelView, view: View, op: BinaryOp | str | None = None,
                       override: bool = False) -> View:
    """Model on the left: predictions combined with the view's measures."""
    op = as_op(op)
    _checked_verdict(view, mv, override)
    pred, unmatched = _prediction_view(view, mv)
    out = stat_binary(pred, view, op, override)
    if unmatched:
        out = out.with_warnings(_unmatched_note(unmatched))
    return out


def compose_model_model(left: ModelView, right: ModelView, op: BinaryOp | str | None = None,
                        override: bool = False) -> View:
    """Predict both models over a shared grid and combine pointwise."""
    op = as_op(op)
    verdict = _checked_verdict(left, right, override)

    features = left.feature_attrs
    merged = []
    for f in features:
        l_lo, l_hi = left.domain_of(f)
        r_lo, r_hi = right.domain_of(f)
        merged.append((f, (min(l_lo, r_lo), max(l_hi, r_hi))))
    n = _grid_points_per_feature(len(features))
    axes = [_feature_axis(bounds, n) for _, bounds in merged]

    lmodels = left.models_map()
    rmodels = right.models_map()
    shared = [key for key in lmodels if key in rmodels]
    if not shared:
        raise EmptyJoinError("the two model views share no condition groups")
    skipped = (len(lmodels) - len(shared)) + (len(rmodels) - len(shared))

    rows = []
    for key in shared:
        for point in itertools.product(*axes):
            feats = [as_feature_value(p) for p in point]
            y1 = lmodels[key].predict(feats)
            y2 = rmodels[key].predict(feats)
            rows.append(key + tuple(point) + (eval_expr(op.expr, {"y1": y1, "y2": y2}),))

    base_schema = left.base.result().schema
    attrs = [base_schema.attr(c) for c in left.cond_attrs]
    for f in features:
        attrs.append(AttributeDef(f, Role.DIMENSION, base_schema.attr(f).kind))
    y_name = left.base.measure.name
    attrs.append(AttributeDef(y_name, Role.MEASURE, Kind.NUMERIC))
    rel = Relation(Schema(tuple(attrs)), tuple(rows))

    warnings = list(verdict.warnings)
    if skipped:
        warnings.append(Note(UNMATCHED_ROWS, f"{skipped} model group(s) exist on one side only and were skipped"))
    mtype = left.base.measure.mtype if left.base.measure.mtype.kind != "wildcard" else right.base.measure.mtype
    return View(
        id=next_id(),
        title=f"{left.display_title()} {op.symbol} {right.display_title()}",
        plan=Values(rel),
        group_attrs=tuple(left.cond_attrs) + tuple(features),
        measure=Measure(None, None, mtype, y_name),
        mapping=left.mapping,
        canonical=False,
        catalog=left.base.catalog,
        source_table=None,
        warnings=tuple(warnings),
    )
