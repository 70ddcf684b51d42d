"""Temporal-logic front end: AST, concrete syntax, and robustness semantics."""

from .ast import (
    Always,
    And,
    Atom,
    AxisBox,
    BallDistance,
    EvaluationError,
    Eventually,
    Formula,
    HalfPlaneProduct,
    IntervalError,
    Not,
    Or,
    Predicate,
    StlError,
    StlSyntaxError,
    TimeInterval,
    TrueFormula,
    Until,
    contains_temporal,
    format_formula,
    has_nested_temporal,
    horizon,
    intervals,
    iter_nodes,
)
from .parser import parse_formula
from .robustness import DEFAULT_DT, EvalSettings, prefix_robustness, robustness

__all__ = [
    "Always", "And", "Atom", "AxisBox", "BallDistance", "EvaluationError",
    "Eventually", "Formula", "HalfPlaneProduct", "IntervalError", "Not", "Or",
    "Predicate", "StlError", "StlSyntaxError", "TimeInterval", "TrueFormula",
    "Until", "contains_temporal", "format_formula", "has_nested_temporal",
    "horizon", "intervals", "iter_nodes", "parse_formula", "DEFAULT_DT",
    "EvalSettings", "prefix_robustness", "robustness",
]
