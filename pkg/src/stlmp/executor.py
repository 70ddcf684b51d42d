"""Closed-loop execution of a plan on a (possibly noisy) simulated robot.

Each planned edge is executed leg by leg.  At every node boundary the
realized pose is compared with the planned one: small position errors are
absorbed by re-aiming the next edge at the upcoming node with fresh legs
from the estimators, while errors beyond the tracking tolerances trigger a
full replan rooted at the realized space-time state, evaluated against the
already-realized history.  The simulated clock pauses while replanning.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .planner import PlanningError, PlanResult, PolicyBank, plan, sample_policies
from .primitives import NoiseSpec, Policy, get_model, rollout
from .reach import ReachEstimator
from .stl import robustness
from .trajectory import TimedTrajectory
from .world import Scenario, edge_free

EVENT_SEGMENT_START = "segment_start"
EVENT_SEGMENT_END = "segment_end"
EVENT_DEVIATION = "deviation_detected"
EVENT_REPLAN_TRIGGERED = "replan_triggered"
EVENT_REPLAN_DONE = "replan_done"

_EXACT_EPS = 1e-9
DEFAULT_RECORD_DT = 0.05


@dataclass
class ExecutionTrace:
    """Realized motion, event log, and the robustness actually achieved."""

    trajectory: TimedTrajectory
    events: list[tuple[float, str]]
    final_robustness: float
    replans: int
    corrections: int


class ExecutionError(RuntimeError):
    def __init__(self, message: str, trace: ExecutionTrace | None = None):
        super().__init__(message)
        self.trace = trace


class _Recorder:
    def __init__(self, position: np.ndarray, heading: float, time: float):
        self.times = [float(time)]
        self.positions = [np.asarray(position, dtype=float).copy()]
        self.headings = [float(heading)]
        self.events: list[tuple[float, str]] = []

    def extend(self, segment) -> None:
        skip = 1 if abs(segment.times[0] - self.times[-1]) <= 1e-12 else 0
        self.times.extend(float(t) for t in segment.times[skip:])
        self.positions.extend(np.asarray(p, dtype=float) for p in segment.positions[skip:])
        self.headings.extend(float(h) for h in segment.headings[skip:])

    def override_position(self, position: np.ndarray) -> None:
        self.positions[-1] = np.asarray(position, dtype=float).copy()

    def event(self, kind: str) -> None:
        self.events.append((self.times[-1], kind))

    def trajectory(self, complete: bool = False) -> TimedTrajectory:
        return TimedTrajectory(np.array(self.times), np.array(self.positions),
                               np.array(self.headings), complete=complete)

    @property
    def state(self):
        return self.positions[-1], self.headings[-1], self.times[-1]


def execute(plan_result: PlanResult, scenario: Scenario, policies: list[Policy],
            estimators: dict[str, ReachEstimator], d_range: tuple[float, float], *,
            noise: NoiseSpec | None = None, rng: np.random.Generator | None = None,
            eps_track: float = 0.1, eps_time: float = 1.0, max_replans: int = 3,
            kicks: dict[int, np.ndarray] | None = None,
            record_dt: float = DEFAULT_RECORD_DT) -> ExecutionTrace:
    """Run ``plan_result`` in closed loop and score the realized trajectory.

    ``kicks`` maps a node-arrival count (1 = first non-root node reached) to
    a position offset injected at that boundary, for disturbance studies.
    Raises ExecutionError when the replanning budget runs out or a replan
    finds no satisfying continuation; the partial trace rides along on the
    exception.
    """
    model = get_model(scenario.robot_model)
    bank = PolicyBank.build(policies, estimators)
    if rng is None:
        rng = np.random.default_rng(scenario.planner.seed)
    kicks = kicks or {}
    noisy = noise is not None and noise.enabled

    root = plan_result.nodes[0]
    rec = _Recorder(root.position, root.heading, root.time)
    current = plan_result
    node_idx = 1
    arrivals = 0
    replans = 0
    corrections = 0
    t0 = scenario.start_time

    def finalize(complete: bool = True) -> ExecutionTrace:
        traj = rec.trajectory(complete=False).hold_extended(scenario.horizon,
                                                            complete=complete)
        rho = robustness(scenario.formula, traj, t0, scenario.eval_settings()) if complete \
            else -math.inf
        return ExecutionTrace(trajectory=traj, events=rec.events,
                              final_robustness=rho, replans=replans,
                              corrections=corrections)

    def trigger_replan(position, heading, time) -> PlanResult:
        nonlocal replans
        rec.event(EVENT_DEVIATION)
        rec.event(EVENT_REPLAN_TRIGGERED)
        if replans >= max_replans:
            raise ExecutionError(f"replanning budget ({max_replans}) exhausted",
                                 trace=finalize(complete=False))
        replans += 1
        rebased = scenario.rebased(position, heading, time)
        try:
            result = plan(rebased, policies, estimators, d_range, rng=rng,
                          prefix=rec.trajectory(complete=False))
        except PlanningError as err:
            raise ExecutionError(f"replanning failed: {err}",
                                 trace=finalize(complete=False)) from err
        rec.event(EVENT_REPLAN_DONE)
        return result

    while node_idx < len(current.nodes):
        planned_prev = current.nodes[node_idx - 1]
        target_node = current.nodes[node_idx]
        position, heading, now = rec.state
        deviation = float(np.linalg.norm(np.asarray(position) - planned_prev.position))
        time_slip = abs(now - planned_prev.time)

        if deviation > eps_track or time_slip > eps_time:
            current = trigger_replan(position, heading, now)
            node_idx = 1
            continue

        if deviation <= _EXACT_EPS and time_slip <= _EXACT_EPS:
            legs = [(s.policy, s.duration) for s in target_node.segments]
        else:
            # small error: re-aim fresh legs at the next planned node
            corrections += 1
            replacement = sample_policies(bank, (position, heading, now),
                                          target_node.position, rng,
                                          scenario.planner.theta_tol)
            if replacement is None or not edge_free((position, heading, now),
                                                    [(s.policy, s.duration)
                                                     for s in replacement.segments],
                                                    scenario):
                current = trigger_replan(position, heading, now)
                node_idx = 1
                continue
            legs = [(s.policy, s.duration) for s in replacement.segments]

        for policy, duration in legs:
            rec.event(EVENT_SEGMENT_START)
            position, heading, now = rec.state
            segment = rollout(model, position, heading, policy, duration,
                              t_start=now, noise=noise, rng=rng if noisy else None,
                              record_dt=record_dt if noisy else None)
            rec.extend(segment)
            rec.event(EVENT_SEGMENT_END)

        arrivals += 1
        if arrivals in kicks:
            position, heading, now = rec.state
            rec.override_position(np.asarray(position) + np.asarray(kicks[arrivals], dtype=float))
        node_idx += 1

    return finalize()
