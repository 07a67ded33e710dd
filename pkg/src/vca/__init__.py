"""View composition engine.

Views are group-by aggregation queries paired with a visual mapping.
The algebra composes them (statistics, unions), decomposes them
(extract, explode) and lifts them into per-group linear models, with a
safety type check guarding every composition.
"""

from .algebra import (
    BinaryOp, LayoutHint, compose_pair, explode, extract, marks_viewset,
    stat_binary, union_nary, viewset_cross, viewset_stat, viewset_union,
)
from .errors import (
    CatalogError, ClosureError, ConfigError, EmptyJoinError, EmptyModelError,
    IngestError, MappingError, Note, OperandError, ParseError, PlanTypeError,
    SafetyError, UnboundNameError, UnsupportedNodeError, VcaError,
)
from .lift import (
    LinearModel, ModelView, compose_model_model, compose_model_view,
    compose_view_model, lift, sample_model_view,
)
from .relation import (
    AttributeDef, Catalog, Domain, Kind, Relation, Role, Schema,
    attribute_domain, format_relation, ingest_csv,
)
from .safety import (
    MatchKind, OperatorKind, Relationship, SafetyVerdict, Status,
    check_compose, measure_type, schema_match,
)
from .sqlgen import compile_plan, run_on_sqlite
from .view import (
    Channel, ConstantView, MarkType, Measure, MeasureType, View, ViewSet,
    VisualMapping, cell_operand, constant_operand, legend_operand, make_view,
    marks_operand,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeDef", "BinaryOp", "Catalog", "CatalogError", "Channel",
    "ClosureError", "ConfigError", "ConstantView", "Domain", "EmptyJoinError",
    "EmptyModelError", "IngestError", "Kind", "LayoutHint", "LinearModel",
    "MappingError", "MarkType", "MatchKind", "Measure", "MeasureType",
    "ModelView", "Note", "OperandError", "OperatorKind", "ParseError",
    "PlanTypeError", "Relation", "Relationship", "Role", "SafetyError",
    "SafetyVerdict", "Schema", "Status", "UnboundNameError",
    "UnsupportedNodeError", "VcaError", "View", "ViewSet", "VisualMapping",
    "attribute_domain", "cell_operand", "check_compose", "compile_plan",
    "compose_model_model", "compose_model_view", "compose_pair",
    "compose_view_model", "constant_operand", "explode", "extract",
    "format_relation", "ingest_csv", "legend_operand", "lift", "make_view",
    "marks_operand", "marks_viewset", "measure_type", "run_on_sqlite",
    "sample_model_view", "schema_match", "stat_binary", "union_nary",
    "viewset_cross", "viewset_stat", "viewset_union",
]
