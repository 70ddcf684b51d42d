"""Quantitative semantics over linearly interpolated timed trajectories.

Window bounds are absolute times anchored at the trajectory root, matching
how task formulas are written ("reach the goal between 20 and 25 seconds").
Temporal min/max run over a dense evaluation grid: every multiple of the
grid step from the first sample on, plus all sample times and all window
endpoints, so window-edge obligations are never skipped.

Evaluation is pure and reentrant; formulas and trajectories are never
mutated, so concurrent evaluation needs no locking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..trajectory import TimedTrajectory
from .ast import (
    Always,
    And,
    Eventually,
    EvaluationError,
    Formula,
    Not,
    Or,
    Predicate,
    TimeInterval,
    TrueFormula,
    Until,
    intervals,
)

DEFAULT_DT = 0.05
_TOL = 1e-9


@dataclass(frozen=True)
class EvalSettings:
    """Grid step and the optimistic bound used for unelapsed obligations.

    ``rho_opt`` also caps |robustness| of the `true` literal so that
    satisfaction degrees stay finite; the scenario pipeline sets it to the
    workspace diagonal.
    """

    dt: float = DEFAULT_DT
    rho_opt: float = math.inf


def _clamp(value: float, rho_opt: float) -> float:
    if not math.isfinite(value) and math.isfinite(rho_opt):
        return math.copysign(rho_opt, value)
    return float(value)


def _grid(traj: TimedTrajectory, formula: Formula, at: float | None, dt: float) -> np.ndarray:
    t0, t_end = traj.start_time, traj.end_time
    pieces = [np.arange(t0, t_end + dt / 2.0, dt), traj.times, [t_end]]
    for iv in intervals(formula):
        pieces.append([iv.t1, iv.t2])
    if at is not None:
        pieces.append([at])
    grid = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in pieces]))
    return grid[(grid >= t0 - _TOL) & (grid <= t_end + _TOL)]


def _window_mask(ts: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return (ts >= lo - _TOL) & (ts <= hi + _TOL)


def _until_value(r1: np.ndarray, r2: np.ndarray) -> float:
    # max over witness times t' of min(right(t'), min of left over [t1, t'])
    return float(np.minimum(r2, np.minimum.accumulate(r1)).max())


def _evaluate(formula: Formula, ts: np.ndarray, xs: np.ndarray, frontier: float | None,
              rho_opt: float) -> np.ndarray:
    """Robustness of ``formula`` at every grid instant.

    ``frontier`` is the last covered time when evaluating a growing prefix
    (None for complete signals).  Timed operators yield constant arrays
    because their windows are absolute.
    """
    if isinstance(formula, TrueFormula):
        return np.full(ts.shape, math.inf)
    if isinstance(formula, Predicate):
        return formula.atom.value(xs)
    if isinstance(formula, Not):
        return -_evaluate(formula.child, ts, xs, frontier, rho_opt)
    if isinstance(formula, And):
        return np.minimum(
            _evaluate(formula.left, ts, xs, frontier, rho_opt),
            _evaluate(formula.right, ts, xs, frontier, rho_opt),
        )
    if isinstance(formula, Or):
        return np.maximum(
            _evaluate(formula.left, ts, xs, frontier, rho_opt),
            _evaluate(formula.right, ts, xs, frontier, rho_opt),
        )

    iv: TimeInterval = formula.interval
    if isinstance(formula, Always):
        hi = iv.t2 if frontier is None else min(iv.t2, frontier)
        mask = _window_mask(ts, iv.t1, hi)
        if not mask.any():
            value = rho_opt  # window entirely ahead of the frontier
        else:
            value = float(_evaluate(formula.child, ts, xs, frontier, rho_opt)[mask].min())
        return np.full(ts.shape, value)

    if isinstance(formula, Eventually):
        child = _evaluate(formula.child, ts, xs, frontier, rho_opt)
        mask = _window_mask(ts, iv.t1, iv.t2 if frontier is None else min(iv.t2, frontier))
        achieved = float(child[mask].max()) if mask.any() else -math.inf
        if frontier is not None and iv.t2 > frontier + _TOL:
            achieved = max(achieved, rho_opt)  # the open future stays optimistic
        return np.full(ts.shape, achieved)

    if isinstance(formula, Until):
        left = _evaluate(formula.left, ts, xs, frontier, rho_opt)
        right = _evaluate(formula.right, ts, xs, frontier, rho_opt)
        mask = _window_mask(ts, iv.t1, iv.t2 if frontier is None else min(iv.t2, frontier))
        achieved = _until_value(left[mask], right[mask]) if mask.any() else -math.inf
        if frontier is not None and iv.t2 > frontier + _TOL:
            achieved = max(achieved, rho_opt)
        return np.full(ts.shape, achieved)

    raise TypeError(f"not a formula node: {formula!r}")


def _check_coverage(formula: Formula, t0: float, t_end: float) -> None:
    for iv in intervals(formula):
        if iv.t2 > t_end + _TOL or iv.t1 < t0 - _TOL:
            raise EvaluationError(
                f"window [{iv.t1},{iv.t2}] is not covered by the trajectory span "
                f"[{t0},{t_end}]"
            )


def _value_at(formula: Formula, traj: TimedTrajectory, at: float, frontier: float | None,
              settings: EvalSettings) -> float:
    grid = _grid(traj, formula, at, settings.dt)
    xs = traj.positions_at(grid)
    values = _evaluate(formula, grid, xs, frontier, settings.rho_opt)
    idx = int(np.searchsorted(grid, at - _TOL))
    idx = min(idx, len(grid) - 1)
    return _clamp(float(values[idx]), settings.rho_opt)


def robustness(formula: Formula, traj: TimedTrajectory, at: float | None = None,
               settings: EvalSettings = EvalSettings()) -> float:
    """Satisfaction degree of a complete trajectory at absolute time ``at``.

    Semantics: predicate -> h(x(t)); negation flips sign; conjunction takes
    min, disjunction max; `G` takes the min over its window, `F` the max;
    `left U right` takes the best witness instant t' in the window such that
    `right` holds at t' and `left` held from the window start through t'.

    Raises EvaluationError when a window extends past the sampled span.
    """
    if not traj.complete:
        raise EvaluationError("robustness needs a complete trajectory; "
                              "use prefix_robustness while still growing one")
    if at is None:
        at = traj.start_time
    if at < traj.start_time - _TOL or at > traj.end_time + _TOL:
        raise EvaluationError(f"evaluation instant {at} outside trajectory span")
    _check_coverage(formula, traj.start_time, traj.end_time)
    return _value_at(formula, traj, at, None, settings)


def prefix_robustness(formula: Formula, traj: TimedTrajectory,
                      settings: EvalSettings = EvalSettings()) -> float:
    """Partial satisfaction degree of a (possibly) growing trajectory.

    Operators whose window is not fully elapsed are scored optimistically:
    `F`/`U` contribute at least ``rho_opt`` while their window is still
    open, and `G` is evaluated over the elapsed part of its window only.
    Once every window has elapsed this coincides with ``robustness`` at the
    first sample time.
    """
    return _value_at(formula, traj, traj.start_time, traj.end_time, settings)
