"""Displacement-to-duration estimators fitted from policy rollouts.

Each policy gets a least-squares polynomial mapping displacement magnitude
(meters for translations, radians for rotations) to the application time
that produces it, valid on the displacement range seen in training.  The
planner never extrapolates: it steers edge lengths into the shared range.

Estimators are immutable after fitting and safe for concurrent prediction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from .primitives import Policy, PrimitiveKind, RobotModel, rollout

DEFAULT_HORIZONS = np.round(np.arange(1, 101) * 0.1, 10)  # 0.1 .. 10.0 s
DEFAULT_DEGREE = 3
HOLDOUT_FRACTION = 0.2
_MONOTONE_GRID = 512
_RANGE_TOL = 1e-9


class FitError(ValueError):
    pass


class DisplacementRangeError(ValueError):
    pass


class RangeIntersectionError(ValueError):
    pass


@dataclass(frozen=True)
class ReachSample:
    duration: float
    displacement: float  # magnitude: meters or radians

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("sample duration must be positive")
        if self.displacement < 0.0:
            raise ValueError("sample displacement is a magnitude")


@dataclass(frozen=True)
class ReachEstimator:
    """duration = sum_i coefficients[i] * displacement**i on [d_min, d_max]."""

    policy_id: str
    kind: PrimitiveKind
    coefficients: tuple[float, ...]
    d_min: float
    d_max: float
    residual: float  # max relative error on the held-out samples

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def predict(self, displacement: float) -> float:
        if displacement < self.d_min - _RANGE_TOL or displacement > self.d_max + _RANGE_TOL:
            raise DisplacementRangeError(
                f"displacement {displacement} outside [{self.d_min}, {self.d_max}] "
                f"for policy {self.policy_id!r}"
            )
        d = min(max(displacement, self.d_min), self.d_max)
        return float(P.polyval(d, self.coefficients))


def predict_duration(estimator: ReachEstimator, displacement: float) -> float:
    return estimator.predict(displacement)


def collect_samples(model: RobotModel, policy: Policy,
                    horizons: np.ndarray | None = None) -> list[ReachSample]:
    """Noiseless rollouts from a canonical start over increasing horizons."""
    horizons = DEFAULT_HORIZONS if horizons is None else np.asarray(horizons, dtype=float)
    if np.any(horizons <= 0.0) or np.any(np.diff(horizons) <= 0.0):
        raise ValueError("horizons must be positive and strictly increasing")
    start = np.zeros(2)
    samples = []
    for h in horizons:
        seg = rollout(model, start, 0.0, policy, float(h))
        if policy.is_rotation:
            displacement = abs(seg.end_heading - 0.0)
        else:
            displacement = float(np.linalg.norm(seg.end_position - start))
        samples.append(ReachSample(duration=float(h), displacement=displacement))
    return samples


def _holdout_indices(n: int, fraction: float) -> np.ndarray:
    if fraction <= 0.0:
        return np.array([], dtype=int)
    stride = max(2, int(round(1.0 / fraction)))
    return np.arange(n)[np.arange(n) % stride == stride // 2]


def fit_estimator(samples: list[ReachSample], degree: int = DEFAULT_DEGREE,
                  holdout_fraction: float = HOLDOUT_FRACTION, *,
                  policy_id: str = "", kind: PrimitiveKind = PrimitiveKind.FORWARD
                  ) -> ReachEstimator:
    """Least-squares polynomial fit with a strict-monotonicity guard.

    The holdout split is deterministic (every ``round(1/fraction)``-th sample
    by index) so refits are reproducible.  Raises FitError when the fitted
    curve is not strictly increasing (try a lower degree), on rank-deficient
    systems, and when there are too few or duplicated displacements.
    """
    d = np.array([s.displacement for s in samples])
    t = np.array([s.duration for s in samples])
    if np.unique(d).size != d.size:
        raise FitError("displacements must be distinct")
    hold = _holdout_indices(len(samples), holdout_fraction)
    train = np.setdiff1d(np.arange(len(samples)), hold)
    if train.size < degree + 1:
        raise FitError(f"need at least {degree + 1} training samples for degree {degree}")

    with warnings.catch_warnings():
        warnings.simplefilter("error", np.exceptions.RankWarning)
        try:
            coeffs = P.polyfit(d[train], t[train], degree)
        except (np.exceptions.RankWarning, np.linalg.LinAlgError) as err:
            raise FitError(f"rank-deficient fit for policy {policy_id!r}: {err}") from None

    d_min, d_max = float(d[train].min()), float(d[train].max())
    grid = np.linspace(d_min, d_max, _MONOTONE_GRID)
    if np.any(P.polyval(grid, P.polyder(coeffs)) <= 0.0):
        raise FitError(
            f"fitted curve for policy {policy_id!r} is not strictly increasing "
            f"on [{d_min}, {d_max}]; try a lower degree"
        )
    if np.any(P.polyval(grid, coeffs) <= 0.0):
        raise FitError(f"fitted durations for policy {policy_id!r} are not positive")

    check = hold if hold.size else train
    pred = P.polyval(d[check], coeffs)
    residual = float(np.max(np.abs(pred - t[check]) / t[check]))
    return ReachEstimator(
        policy_id=policy_id,
        kind=kind,
        coefficients=tuple(float(c) for c in coeffs),
        d_min=d_min,
        d_max=d_max,
        residual=residual,
    )


def fit_with_fallback(samples: list[ReachSample], degree: int = DEFAULT_DEGREE, *,
                      policy_id: str = "", kind: PrimitiveKind = PrimitiveKind.FORWARD
                      ) -> ReachEstimator:
    """Fit at ``degree``; fall back to a line when the guard rejects the fit."""
    try:
        return fit_estimator(samples, degree, policy_id=policy_id, kind=kind)
    except FitError:
        if degree <= 1:
            raise
        return fit_estimator(samples, 1, policy_id=policy_id, kind=kind)


def build_estimators(policies: list[Policy], model: RobotModel,
                     horizons: np.ndarray | None = None,
                     degree: int = DEFAULT_DEGREE) -> dict[str, ReachEstimator]:
    return {
        p.id: fit_with_fallback(collect_samples(model, p, horizons), degree,
                                policy_id=p.id, kind=p.kind)
        for p in policies
    }


def compute_distance_range(estimators) -> tuple[float, float]:
    """Shared translation range: any translation policy can realize any length in it."""
    translational = [e for e in estimators if not e.kind.is_rotation]
    if not translational:
        raise RangeIntersectionError("no translation estimators given")
    d_min = max(e.d_min for e in translational)
    d_max = min(e.d_max for e in translational)
    if d_min >= d_max:
        raise RangeIntersectionError(
            f"translation ranges do not intersect: max of minima {d_min} >= "
            f"min of maxima {d_max}"
        )
    return d_min, d_max


# --- text-table cache ---

def save_estimators(path: str | Path, estimators: dict[str, ReachEstimator]) -> None:
    lines = ["# policy_id\tkind\tdegree\tcoefficients\td_min\td_max\tresidual"]
    for est in estimators.values():
        coeffs = " ".join(repr(c) for c in est.coefficients)
        lines.append("\t".join([
            est.policy_id, est.kind.value, str(est.degree), coeffs,
            repr(est.d_min), repr(est.d_max), repr(est.residual),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_estimators(path: str | Path) -> dict[str, ReachEstimator]:
    estimators = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        policy_id, kind, degree, coeffs, d_min, d_max, residual = line.split("\t")
        est = ReachEstimator(
            policy_id=policy_id,
            kind=PrimitiveKind(kind),
            coefficients=tuple(float(c) for c in coeffs.split()),
            d_min=float(d_min),
            d_max=float(d_max),
            residual=float(residual),
        )
        if est.degree != int(degree):
            raise ValueError(f"corrupt estimator row for {policy_id!r}")
        estimators[policy_id] = est
    return estimators
