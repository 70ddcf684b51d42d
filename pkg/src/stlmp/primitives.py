"""Velocity-limited motion primitives over simple kinematic robot models.

Four primitive classes (clockwise, counterclockwise, forward, backward) are
realized by constant-velocity controllers: rotations change heading in
place, translations displace along the current heading.  Noiseless rollouts
use the closed-form update and are bitwise reproducible; noisy rollouts
integrate at a fixed step with Gaussian perturbations.

Models are value-like: rollouts take a state and return new samples, so
concurrent rollouts are safe.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

INTEGRATION_DT = 1e-3


class PrimitiveKind(enum.Enum):
    CLOCKWISE = "clockwise"
    COUNTERCLOCKWISE = "counterclockwise"
    FORWARD = "forward"
    BACKWARD = "backward"

    @property
    def is_rotation(self) -> bool:
        return self in (PrimitiveKind.CLOCKWISE, PrimitiveKind.COUNTERCLOCKWISE)


@dataclass(frozen=True)
class RobotModel:
    """Kinematic limits for one robot; the step semantics live in rollout()."""

    name: str
    max_linear: float   # m/s
    max_angular: float  # rad/s


MODELS = {
    "diffdrive": RobotModel("diffdrive", max_linear=0.22, max_angular=2.84),
    "quadruped-proxy": RobotModel("quadruped-proxy", max_linear=0.4, max_angular=1.5),
}


def get_model(name: str) -> RobotModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown robot model {name!r}; known: {sorted(MODELS)}") from None


# Sign convention per class: forward/counterclockwise positive, backward/clockwise negative.
_KIND_SIGN = {
    PrimitiveKind.FORWARD: 1.0,
    PrimitiveKind.BACKWARD: -1.0,
    PrimitiveKind.COUNTERCLOCKWISE: 1.0,
    PrimitiveKind.CLOCKWISE: -1.0,
}


@dataclass(frozen=True)
class Policy:
    """One motion-primitive controller at a fixed signed velocity."""

    id: str
    kind: PrimitiveKind
    velocity: float  # m/s for translations, rad/s for rotations, signed
    model: str

    def __post_init__(self):
        if self.velocity == 0.0 or math.copysign(1.0, self.velocity) != _KIND_SIGN[self.kind]:
            raise ValueError(f"policy {self.id!r}: velocity sign must match class {self.kind.value}")
        limits = get_model(self.model)
        limit = limits.max_angular if self.kind.is_rotation else limits.max_linear
        if abs(self.velocity) > limit + 1e-12:
            raise ValueError(
                f"policy {self.id!r}: |velocity| {abs(self.velocity)} exceeds "
                f"model limit {limit}"
            )

    @property
    def is_rotation(self) -> bool:
        return self.kind.is_rotation


@dataclass(frozen=True)
class NoiseSpec:
    """Diffusion intensities: a step of length dt is perturbed with std*sqrt(dt)."""

    pos_std: float = 0.0  # m / sqrt(s), applied per coordinate
    ang_std: float = 0.0  # rad / sqrt(s)

    @property
    def enabled(self) -> bool:
        return self.pos_std > 0.0 or self.ang_std > 0.0


def apply_policy(position: np.ndarray, heading: float, policy: Policy,
                 duration: float) -> tuple[np.ndarray, float]:
    """Closed-form noiseless state update."""
    position = np.asarray(position, dtype=float)
    if policy.is_rotation:
        return position.copy(), heading + policy.velocity * duration
    step = policy.velocity * duration
    return position + step * np.array([math.cos(heading), math.sin(heading)]), heading


@dataclass
class RolloutSegment:
    """Simulated motion samples for one policy application."""

    times: np.ndarray
    positions: np.ndarray
    headings: np.ndarray

    @property
    def end_position(self) -> np.ndarray:
        return self.positions[-1]

    @property
    def end_heading(self) -> float:
        return float(self.headings[-1])

    @property
    def end_time(self) -> float:
        return float(self.times[-1])


def rollout(model: RobotModel, position: np.ndarray, heading: float, policy: Policy,
            duration: float, *, t_start: float = 0.0, noise: NoiseSpec | None = None,
            rng: np.random.Generator | None = None,
            record_dt: float | None = None) -> RolloutSegment:
    """Apply ``policy`` for ``duration`` seconds from the given state.

    Noiseless rollouts are exact (closed form) and deterministic; with a
    NoiseSpec they integrate at INTEGRATION_DT and need an rng.  Samples are
    recorded at multiples of ``record_dt`` (endpoints always included).
    """
    if policy.model != model.name:
        raise ValueError(f"policy {policy.id!r} belongs to model {policy.model!r}, "
                         f"not {model.name!r}")
    if duration <= 0.0:
        raise ValueError("rollout duration must be positive")
    position = np.asarray(position, dtype=float)

    if noise is None or not noise.enabled:
        if record_dt is None:
            rel = np.array([0.0, duration])
        else:
            rel = np.unique(np.append(np.arange(0.0, duration, record_dt), duration))
        if policy.is_rotation:
            positions = np.tile(position, (len(rel), 1))
            headings = heading + policy.velocity * rel
        else:
            direction = np.array([math.cos(heading), math.sin(heading)])
            positions = position + np.outer(policy.velocity * rel, direction)
            headings = np.full(len(rel), heading)
        return RolloutSegment(t_start + rel, positions, headings)

    if rng is None:
        raise ValueError("noisy rollout needs an rng")
    record_dt = record_dt if record_dt is not None else duration
    n_steps = max(1, int(math.ceil(duration / INTEGRATION_DT)))
    dt = duration / n_steps
    sqrt_dt = math.sqrt(dt)
    pos = position.copy()
    head = heading
    times = [t_start]
    positions = [pos.copy()]
    headings = [head]
    next_record = record_dt
    for k in range(1, n_steps + 1):
        if policy.is_rotation:
            head += policy.velocity * dt
        else:
            pos = pos + policy.velocity * dt * np.array([math.cos(head), math.sin(head)])
        if noise.ang_std > 0.0:
            head += noise.ang_std * sqrt_dt * rng.standard_normal()
        if noise.pos_std > 0.0:
            pos = pos + noise.pos_std * sqrt_dt * rng.standard_normal(2)
        t_rel = k * dt
        if t_rel >= next_record - 1e-12 or k == n_steps:
            times.append(t_start + t_rel)
            positions.append(pos.copy())
            headings.append(head)
            next_record += record_dt
    return RolloutSegment(np.array(times), np.array(positions), np.array(headings))


def policy_library(model_name: str, levels: int = 3) -> list[Policy]:
    """Evenly spaced velocity magnitudes per primitive class, up to the limits."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    model = get_model(model_name)
    policies = []
    for kind in PrimitiveKind:
        limit = model.max_angular if kind.is_rotation else model.max_linear
        for i in range(1, levels + 1):
            magnitude = limit * i / levels
            policies.append(Policy(
                id=f"{kind.value}_{i}",
                kind=kind,
                velocity=_KIND_SIGN[kind] * magnitude,
                model=model_name,
            ))
    return policies
