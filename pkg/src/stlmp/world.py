"""Workspace, disc obstacles (optionally time-windowed), scenario files, and
space-time collision checks for planned edges.

Geometric checks use the raw obstacle discs only; clearance requirements
("stay 0.4 m away") belong to the task formula, which keeps hard collision
and graded satisfaction separable.  Scenario data is immutable after load,
so collision queries can run concurrently.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .primitives import Policy, apply_policy
from .stl import EvalSettings, Formula, StlError, horizon, intervals, parse_formula
from .stl.ast import TimeInterval

DEFAULT_COLLISION_STEP = 0.02  # m of arc length between edge check points
DEFAULT_TIME_STEP = 0.1        # s between checks while the robot holds position
_TOL = 1e-9


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Workspace:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(c) for c in self.lower))
        object.__setattr__(self, "upper", tuple(float(c) for c in self.upper))
        if len(self.lower) != len(self.upper):
            raise ScenarioError("workspace corners must have equal dimension")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ScenarioError("workspace lower corner must be strictly below upper")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points >= np.asarray(self.lower)) & (points <= np.asarray(self.upper)),
                      axis=-1)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


@dataclass(frozen=True)
class Obstacle:
    """Disc obstacle; ``active`` limits it to a time window (None = always)."""

    center: tuple[float, ...]
    radius: float
    active: TimeInterval | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0.0:
            raise ScenarioError("obstacle radius must be positive")

    @property
    def is_timed(self) -> bool:
        return self.active is not None

    def active_at(self, t: float) -> bool:
        return self.active is None or (self.active.t1 <= t <= self.active.t2)


@dataclass(frozen=True)
class PlannerParams:
    max_iteration: int = 3000
    seed: int = 0
    dt_eval: float = 0.05
    rho_opt: float | None = None       # None -> workspace diagonal
    collision_step: float = DEFAULT_COLLISION_STEP
    theta_tol: float = 0.02            # rad below which rotation legs are skipped
    rewire_cap: int = 16               # nearest neighbours examined per rewire pass


@dataclass(frozen=True)
class Scenario:
    name: str
    workspace: Workspace
    obstacles: tuple[Obstacle, ...]
    formula: Formula
    formula_text: str
    start_position: tuple[float, float]
    start_heading: float
    start_time: float
    robot_model: str
    policy_levels: int = 3
    planner: PlannerParams = field(default_factory=PlannerParams)

    @property
    def rho_opt(self) -> float:
        return self.planner.rho_opt if self.planner.rho_opt is not None else self.workspace.diagonal

    def eval_settings(self) -> EvalSettings:
        return EvalSettings(dt=self.planner.dt_eval, rho_opt=self.rho_opt)

    @property
    def horizon(self) -> float:
        return max(horizon(self.formula), self.start_time)

    def rebased(self, position, heading: float, time: float) -> "Scenario":
        """Copy rooted at a new start state (used when replanning mid-run)."""
        return replace(self, start_position=tuple(float(c) for c in position),
                       start_heading=float(heading), start_time=float(time))


def point_free(position: np.ndarray, t: float, scenario: Scenario) -> bool:
    """Inside the workspace and strictly outside every obstacle active at ``t``."""
    position = np.asarray(position, dtype=float)
    if not bool(scenario.workspace.contains(position)):
        return False
    for obs in scenario.obstacles:
        if obs.active_at(t) and np.linalg.norm(position - np.asarray(obs.center)) <= obs.radius:
            return False
    return True


def _points_free(positions: np.ndarray, times: np.ndarray, scenario: Scenario) -> bool:
    if not np.all(scenario.workspace.contains(positions)):
        return False
    for obs in scenario.obstacles:
        dist = np.linalg.norm(positions - np.asarray(obs.center), axis=-1)
        hit = dist <= obs.radius
        if obs.active is not None:
            hit &= (times >= obs.active.t1) & (times <= obs.active.t2)
        if hit.any():
            return False
    return True


EdgeSegmentLike = tuple[Policy, float]


def motion_breakpoints(position, heading: float, time: float,
                       segments) -> list[tuple[np.ndarray, float, float]]:
    """(position, heading, time) after each leg of an edge, start excluded."""
    pos = np.asarray(position, dtype=float)
    head, t = float(heading), float(time)
    out = []
    for policy, duration in segments:
        pos, head = apply_policy(pos, head, policy, duration)
        t += duration
        out.append((pos, head, t))
    return out


def _subdivisions(quantity: float, step: float) -> int:
    # Power-of-two interval counts so finer steps re-check every coarser point.
    if quantity <= step:
        return 1
    return 1 << math.ceil(math.log2(quantity / step))


def edge_free(parent_state, segments, scenario: Scenario,
              step: float | None = None) -> bool:
    """Collision check along an edge's motion, endpoints included.

    Check instants are spaced at most ``step`` apart in arc length (and a
    fixed stride in time while the robot rotates in place); the activation
    boundaries of timed obstacles are always checked too.
    """
    step = scenario.planner.collision_step if step is None else step
    pos, head, t = np.asarray(parent_state[0], dtype=float), parent_state[1], parent_state[2]
    window_edges = [b for obs in scenario.obstacles if obs.active is not None
                    for b in (obs.active.t1, obs.active.t2)]
    if not point_free(pos, t, scenario):
        return False
    for policy, duration in segments:
        end_pos, end_head = apply_policy(pos, head, policy, duration)
        end_t = t + duration
        arc = float(np.linalg.norm(end_pos - pos))
        n = max(_subdivisions(arc, step), _subdivisions(duration, DEFAULT_TIME_STEP))
        fractions = np.linspace(0.0, 1.0, n + 1)
        times = t + fractions * duration
        for edge_t in window_edges:
            if t < edge_t < end_t:
                times = np.append(times, edge_t)
        times = np.unique(times)
        frac = (times - t) / duration
        positions = pos + frac[:, None] * (end_pos - pos)
        if not _points_free(positions, times, scenario):
            return False
        pos, head, t = end_pos, end_head, end_t
    return True


# --- scenario files ---

_SCN_SECTIONS = {"scenario", "workspace", "start", "robot", "planner", "formula"}


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ScenarioError(f"{what}: expected two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario file (flat INI sections; see the bundled .scn files)."""
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as err:
        raise ScenarioError(f"{path}: {err}") from err

    try:
        for section in cp.sections():
            if section not in _SCN_SECTIONS and not section.startswith("obstacle."):
                raise ScenarioError(f"unknown section [{section}]")

        workspace = Workspace(
            lower=_parse_pair(cp.get("workspace", "lower"), "workspace.lower"),
            upper=_parse_pair(cp.get("workspace", "upper"), "workspace.upper"),
        )
        obstacles = []
        for section in sorted(s for s in cp.sections() if s.startswith("obstacle.")):
            active = None
            if cp.has_option(section, "active"):
                t1, t2 = _parse_pair(cp.get(section, "active"), f"{section}.active")
                active = TimeInterval(t1, t2)
            obstacles.append(Obstacle(
                center=_parse_pair(cp.get(section, "center"), f"{section}.center"),
                radius=cp.getfloat(section, "radius"),
                active=active,
            ))

        formula_text = cp.get("formula", "text").strip()
        formula = parse_formula(formula_text)

        start_position = _parse_pair(cp.get("start", "position"), "start.position")
        start_heading = cp.getfloat("start", "heading", fallback=0.0)
        start_time = cp.getfloat("start", "time", fallback=0.0)

        defaults = PlannerParams()
        planner = PlannerParams(
            max_iteration=cp.getint("planner", "max_iteration", fallback=defaults.max_iteration),
            seed=cp.getint("planner", "seed", fallback=defaults.seed),
            dt_eval=cp.getfloat("planner", "dt_eval", fallback=defaults.dt_eval),
            rho_opt=cp.getfloat("planner", "rho_opt", fallback=None)
            if cp.has_option("planner", "rho_opt") else None,
            collision_step=cp.getfloat("planner", "collision_step",
                                       fallback=defaults.collision_step),
            theta_tol=cp.getfloat("planner", "theta_tol", fallback=defaults.theta_tol),
            rewire_cap=cp.getint("planner", "rewire_cap", fallback=defaults.rewire_cap),
        ) if cp.has_section("planner") else defaults

        scenario = Scenario(
            name=cp.get("scenario", "name", fallback=path.stem),
            workspace=workspace,
            obstacles=tuple(obstacles),
            formula=formula,
            formula_text=formula_text,
            start_position=start_position,
            start_heading=start_heading,
            start_time=start_time,
            robot_model=cp.get("robot", "model"),
            policy_levels=cp.getint("robot", "levels", fallback=3),
            planner=planner,
        )
    except (configparser.Error, ValueError, StlError) as err:
        if isinstance(err, ScenarioError):
            raise
        raise ScenarioError(f"{path}: {err}") from err

    if not bool(workspace.contains(np.asarray(start_position))):
        raise ScenarioError(f"{path}: start position {start_position} outside the workspace")
    if start_time < 0.0:
        raise ScenarioError(f"{path}: start time must be >= 0")
    for iv in intervals(formula):
        if iv.t1 < start_time - _TOL:
            raise ScenarioError(
                f"{path}: formula window [{iv.t1},{iv.t2}] starts before t0={start_time}"
            )
    return scenario
