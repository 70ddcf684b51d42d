"""AST for the temporal-logic front end: atoms, operators, time windows."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np


class StlError(Exception):
    """Base class for formula errors."""


class IntervalError(StlError):
    """Time window with t1 >= t2 or a negative bound."""


class StlSyntaxError(StlError):
    """Concrete-syntax error with position and the tokens that were expected."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        hint = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{hint}")


class EvaluationError(StlError):
    """Trajectory does not cover a formula's time window."""


@dataclass(frozen=True)
class TimeInterval:
    t1: float
    t2: float

    def __post_init__(self):
        object.__setattr__(self, "t1", float(self.t1))
        object.__setattr__(self, "t2", float(self.t2))
        if not (math.isfinite(self.t1) and math.isfinite(self.t2)):
            raise IntervalError(f"interval bounds must be finite, got [{self.t1},{self.t2}]")
        if self.t1 < 0.0 or self.t1 >= self.t2:
            raise IntervalError(f"invalid interval [{self.t1},{self.t2}]: need 0 <= t1 < t2")


# --- predicate atoms: each defines h over the workspace, true iff h(x) >= 0 ---

@dataclass(frozen=True)
class BallDistance:
    """Disc membership: inside -> h = r - |x-c|, outside -> h = |x-c| - r."""

    center: tuple[float, ...]
    radius: float
    inside: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0.0:
            raise ValueError("ball radius must be positive")

    def value(self, positions: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(positions - np.asarray(self.center), axis=-1)
        return self.radius - d if self.inside else d - self.radius


@dataclass(frozen=True)
class AxisBox:
    """Axis-aligned box membership via the min margin over all faces."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    inside: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(c) for c in self.lower))
        object.__setattr__(self, "upper", tuple(float(c) for c in self.upper))
        if len(self.lower) != len(self.upper):
            raise ValueError("box corners must have equal dimension")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("box lower corner must be strictly below upper corner")

    def value(self, positions: np.ndarray) -> np.ndarray:
        lo = positions - np.asarray(self.lower)
        hi = np.asarray(self.upper) - positions
        v = np.minimum(lo, hi).min(axis=-1)
        return v if self.inside else -v


@dataclass(frozen=True)
class HalfPlaneProduct:
    """Root-product constraint (x_axis - a)(x_axis - b) > 0."""

    axis: int
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "axis", int(self.axis))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if self.axis < 0:
            raise ValueError("axis index must be non-negative")

    def value(self, positions: np.ndarray) -> np.ndarray:
        x = positions[..., self.axis]
        return (x - self.a) * (x - self.b)


Atom = Union[BallDistance, AxisBox, HalfPlaneProduct]


# --- formula nodes ---

@dataclass(frozen=True)
class TrueFormula:
    pass


@dataclass(frozen=True)
class Predicate:
    atom: Atom


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Always:
    child: "Formula"
    interval: TimeInterval


@dataclass(frozen=True)
class Eventually:
    child: "Formula"
    interval: TimeInterval


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    interval: TimeInterval


Formula = Union[TrueFormula, Predicate, Not, And, Or, Always, Eventually, Until]

TEMPORAL_TYPES = (Always, Eventually, Until)


def children(formula: Formula) -> tuple[Formula, ...]:
    if isinstance(formula, (Not, Always, Eventually)):
        return (formula.child,)
    if isinstance(formula, (And, Or)):
        return (formula.left, formula.right)
    if isinstance(formula, Until):
        return (formula.left, formula.right)
    return ()


def iter_nodes(formula: Formula) -> Iterator[Formula]:
    stack = [formula]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def intervals(formula: Formula) -> list[TimeInterval]:
    return [n.interval for n in iter_nodes(formula) if isinstance(n, TEMPORAL_TYPES)]


def horizon(formula: Formula) -> float:
    """Latest window endpoint anywhere in the formula; 0 for untimed formulas."""
    ivs = intervals(formula)
    return max((iv.t2 for iv in ivs), default=0.0)


def contains_temporal(formula: Formula) -> bool:
    return any(isinstance(n, TEMPORAL_TYPES) for n in iter_nodes(formula))


def has_nested_temporal(formula: Formula) -> bool:
    """True if a timed operator occurs inside another timed operator's scope."""
    for node in iter_nodes(formula):
        if isinstance(node, TEMPORAL_TYPES):
            if any(contains_temporal(c) for c in children(node)):
                return True
    return False


def _fmt_num(x: float) -> str:
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def _fmt_interval(iv: TimeInterval) -> str:
    return f"[{_fmt_num(iv.t1)},{_fmt_num(iv.t2)}]"


def _fmt_point(p: tuple[float, ...]) -> str:
    return "(" + ",".join(_fmt_num(c) for c in p) + ")"


def format_atom(atom: Atom) -> str:
    if isinstance(atom, BallDistance):
        op = "<=" if atom.inside else ">="
        return f"ball(x,{_fmt_point(atom.center)}) {op} {_fmt_num(atom.radius)}"
    if isinstance(atom, AxisBox):
        body = f"box(x,{_fmt_point(atom.lower)},{_fmt_point(atom.upper)})"
        return body if atom.inside else f"!{body}"
    return f"halfplane({atom.axis},{_fmt_num(atom.a)},{_fmt_num(atom.b)})"


def format_formula(formula: Formula) -> str:
    """Render in the concrete syntax; ``parse_formula`` round-trips the result."""
    if isinstance(formula, TrueFormula):
        return "true"
    if isinstance(formula, Predicate):
        return format_atom(formula.atom)
    if isinstance(formula, Not):
        return f"!({format_formula(formula.child)})"
    if isinstance(formula, And):
        return f"({format_formula(formula.left)} & {format_formula(formula.right)})"
    if isinstance(formula, Or):
        return f"({format_formula(formula.left)} | {format_formula(formula.right)})"
    if isinstance(formula, Always):
        return f"G{_fmt_interval(formula.interval)}({format_formula(formula.child)})"
    if isinstance(formula, Eventually):
        return f"F{_fmt_interval(formula.interval)}({format_formula(formula.child)})"
    if isinstance(formula, Until):
        left = format_formula(formula.left)
        right = format_formula(formula.right)
        return f"({left} U{_fmt_interval(formula.interval)} {right})"
    raise TypeError(f"not a formula node: {formula!r}")
