"""Sampling-based planner over workspace x time that maximizes specification
robustness.

The tree grows by steering uniform workspace samples into the realizable
edge-length range, realizing each edge as a rotation leg plus a translation
leg whose durations come from the fitted displacement-to-duration
estimators.  Node cost accumulates the negated partial robustness of every
prefix, and a rewiring pass reparents neighbours when routing them through
the new node lowers that cost.  After the iteration budget, the trajectory
with the highest full robustness among the satisfying ones is returned with
its policy schedule.

One planning thread mutates the tree; independent seeded runs are isolated
and safe to run concurrently.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .primitives import Policy, PrimitiveKind
from .reach import ReachEstimator
from .stl import prefix_robustness, robustness
from .trajectory import TimedTrajectory
from .world import Scenario, edge_free, point_free

_EXACT_DTHETA = 1e-9
_RANGE_TOL = 1e-9


class PlanningError(RuntimeError):
    """No satisfying trajectory; carries the best robustness seen for diagnosis."""

    def __init__(self, message: str, best_robustness: float | None = None):
        super().__init__(message)
        self.best_robustness = best_robustness


@dataclass(frozen=True)
class EdgeSegment:
    policy: Policy
    duration: float


@dataclass(frozen=True)
class EdgePlan:
    """A realized edge: legs, arrival, and the closed-form end state."""

    segments: tuple[EdgeSegment, ...]
    arrival_time: float
    end_position: np.ndarray
    end_heading: float


@dataclass
class TimedNode:
    id: int
    position: np.ndarray
    heading: float
    time: float
    parent: int | None
    segments: tuple[EdgeSegment, ...]  # legs of the incoming edge; empty at the root
    cost: float = 0.0
    prefix_rho: float = 0.0
    children: set[int] = field(default_factory=set)
    alive: bool = True
    # cached root-to-node signal (rotation dwell points included)
    path_times: np.ndarray | None = None
    path_positions: np.ndarray | None = None


@dataclass(frozen=True)
class RewireEvent:
    node: int
    old_parent: int
    new_parent: int
    old_cost: float
    new_cost: float


@dataclass
class PlanResult:
    nodes: list[TimedNode]                      # path root -> best node
    schedule: list[EdgeSegment]                 # flattened edge legs along the path
    robustness: float
    trajectory: TimedTrajectory                 # hold-extended to the formula horizon
    iterations: int
    seed: int | None
    tree: "Tree"
    rewires: list[RewireEvent]


def wrap_angle(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def steer(rnd: np.ndarray, nearest: np.ndarray, d_range: tuple[float, float]) -> np.ndarray:
    """Point on the ray nearest->rnd with the distance clamped into d_range."""
    rnd = np.asarray(rnd, dtype=float)
    nearest = np.asarray(nearest, dtype=float)
    offset = rnd - nearest
    dist = float(np.linalg.norm(offset))
    if dist < 1e-12:
        raise ValueError("cannot steer from a zero-length direction")
    d = min(max(dist, d_range[0]), d_range[1])
    return nearest + offset * (d / dist)


def sample_free(workspace, obstacles, rng: np.random.Generator,
                max_tries: int = 1000) -> np.ndarray:
    """Uniform workspace sample rejected against always-active obstacles."""
    static = [o for o in obstacles if o.active is None]
    for _ in range(max_tries):
        p = workspace.sample(rng)
        if all(np.linalg.norm(p - np.asarray(o.center)) > o.radius for o in static):
            return p
    raise RuntimeError("free-space sampling failed; obstacles cover the workspace?")


class PolicyBank:
    """Policies grouped by role, paired with their estimators."""

    def __init__(self, forward, ccw, cw):
        self.forward = forward  # list[(Policy, ReachEstimator)]
        self.ccw = ccw
        self.cw = cw

    @classmethod
    def build(cls, policies: list[Policy], estimators: dict[str, ReachEstimator]) -> "PolicyBank":
        groups = {PrimitiveKind.FORWARD: [], PrimitiveKind.COUNTERCLOCKWISE: [],
                  PrimitiveKind.CLOCKWISE: [], PrimitiveKind.BACKWARD: []}
        for p in policies:
            if p.id not in estimators:
                raise ValueError(f"no estimator for policy {p.id!r}")
            groups[p.kind].append((p, estimators[p.id]))
        if not groups[PrimitiveKind.FORWARD]:
            raise ValueError("the planner needs at least one forward policy")
        return cls(groups[PrimitiveKind.FORWARD], groups[PrimitiveKind.COUNTERCLOCKWISE],
                   groups[PrimitiveKind.CLOCKWISE])

    def rotation_leg(self, dtheta: float, rng: np.random.Generator,
                     allow_undershoot_fallback: bool = True):
        """Pick a rotational policy realizing |dtheta|, or None if impossible.

        Below every policy's minimum realizable angle the slowest policy is
        applied for its minimum duration (slight overshoot) when the
        fallback is allowed; exact-edge callers disallow it.
        """
        side = self.ccw if dtheta > 0.0 else self.cw
        if not side:
            return None
        magnitude = abs(dtheta)
        candidates = [(p, e) for p, e in side
                      if e.d_min - _RANGE_TOL <= magnitude <= e.d_max + _RANGE_TOL]
        if candidates:
            policy, est = candidates[rng.integers(len(candidates))]
            return policy, est.predict(magnitude)
        if not allow_undershoot_fallback or magnitude > max(e.d_max for _, e in side):
            return None
        policy, est = min(side, key=lambda pe: abs(pe[0].velocity))
        return policy, est.predict(est.d_min)

    def translation_leg(self, distance: float, rng: np.random.Generator):
        candidates = [(p, e) for p, e in self.forward
                      if e.d_min - _RANGE_TOL <= distance <= e.d_max + _RANGE_TOL]
        if not candidates:
            return None
        policy, est = candidates[rng.integers(len(candidates))]
        return policy, est.predict(distance)


def sample_policies(bank: PolicyBank, parent_state, target: np.ndarray,
                    rng: np.random.Generator, theta_tol: float = 0.02,
                    exact: bool = False) -> EdgePlan | None:
    """Realize the move parent -> target as (rotation?, translation) legs.

    Rotation aligns the heading with the edge direction; translation covers
    the edge length with a randomly chosen forward policy.  With
    ``exact=True`` (rewiring onto an existing node) the realized end point
    must hit ``target``, so the heading-tolerance shortcut and the
    undershoot fallback are disabled and None is returned when the turn
    cannot be realized.
    """
    pos = np.asarray(parent_state[0], dtype=float)
    heading, t = float(parent_state[1]), float(parent_state[2])
    offset = np.asarray(target, dtype=float) - pos
    distance = float(np.linalg.norm(offset))
    if distance < 1e-12:
        return None
    edge_dir = math.atan2(offset[1], offset[0])
    dtheta = wrap_angle(edge_dir - heading)

    segments: list[EdgeSegment] = []
    skip_turn = abs(dtheta) <= (_EXACT_DTHETA if exact else theta_tol)
    if not skip_turn:
        leg = bank.rotation_leg(dtheta, rng, allow_undershoot_fallback=not exact)
        if leg is None:
            return None
        policy, duration = leg
        segments.append(EdgeSegment(policy, duration))
        heading = heading + policy.velocity * duration
        t += duration

    leg = bank.translation_leg(distance, rng)
    if leg is None:
        return None
    policy, duration = leg
    segments.append(EdgeSegment(policy, duration))
    end = pos + policy.velocity * duration * np.array([math.cos(heading), math.sin(heading)])
    return EdgePlan(tuple(segments), t + duration, end, heading)


def _edge_breaks(parent: TimedNode, segments: tuple[EdgeSegment, ...],
                 position: np.ndarray, heading: float, time: float):
    """Signal samples contributed by one edge: the post-rotation dwell point
    (when there is a rotation leg) and the end node itself."""
    times, points = [], []
    if len(segments) > 1:
        times.append(parent.time + segments[0].duration)
        points.append(parent.position)
    times.append(time)
    points.append(position)
    return np.asarray(times), np.asarray(points)


class Tree:
    """Single-writer spatio-temporal tree with cached prefix signals."""

    def __init__(self, scenario: Scenario, prefix_fn,
                 prefix_traj: TimedTrajectory | None = None):
        self.scenario = scenario
        self.prefix_fn = prefix_fn
        root_pos = np.asarray(scenario.start_position, dtype=float)
        if prefix_traj is not None:
            # realized history; its last sample must be the new root state
            if abs(prefix_traj.end_time - scenario.start_time) > 1e-9:
                raise ValueError("prefix must end at the planning start time")
            self._prefix_times = prefix_traj.times[:-1]
            self._prefix_positions = prefix_traj.positions[:-1]
            self.t0 = prefix_traj.start_time
        else:
            self._prefix_times = np.empty(0)
            self._prefix_positions = np.empty((0, 2))
            self.t0 = scenario.start_time
        root = TimedNode(id=0, position=root_pos, heading=scenario.start_heading,
                         time=scenario.start_time, parent=None, segments=())
        root.path_times = np.append(self._prefix_times, root.time)
        root.path_positions = np.vstack([self._prefix_positions, root.position[None, :]])
        root.prefix_rho = self.prefix_fn(root.path_times, root.path_positions)
        root.cost = -root.prefix_rho
        self.nodes: list[TimedNode] = [root]
        self._capacity = 1024
        self._positions = np.zeros((self._capacity, 2))
        self._positions[0] = root_pos
        self._alive = np.zeros(self._capacity, dtype=bool)
        self._alive[0] = True

    # --- storage helpers ---

    def _grow(self):
        self._capacity *= 2
        positions = np.zeros((self._capacity, 2))
        positions[: len(self.nodes)] = self._positions[: len(self.nodes)]
        alive = np.zeros(self._capacity, dtype=bool)
        alive[: len(self.nodes)] = self._alive[: len(self.nodes)]
        self._positions, self._alive = positions, alive

    def node_state(self, node: TimedNode):
        return node.position, node.heading, node.time

    def alive_nodes(self):
        return (n for n in self.nodes if n.alive)

    def _refresh_cache(self, node: TimedNode) -> None:
        parent = self.nodes[node.parent]
        times, points = _edge_breaks(parent, node.segments, node.position,
                                     node.heading, node.time)
        node.path_times = np.concatenate([parent.path_times, times])
        node.path_positions = np.vstack([parent.path_positions, points])

    def _score(self, node: TimedNode) -> None:
        node.prefix_rho = self.prefix_fn(node.path_times, node.path_positions)
        parent_cost = self.nodes[node.parent].cost if node.parent is not None else 0.0
        node.cost = parent_cost - node.prefix_rho

    # --- queries ---

    def nearest(self, point: np.ndarray) -> TimedNode:
        n = len(self.nodes)
        dist = np.linalg.norm(self._positions[:n] - point, axis=1)
        dist[~self._alive[:n]] = np.inf
        return self.nodes[int(np.argmin(dist))]  # argmin keeps the lowest id on ties

    def near_ids(self, point: np.ndarray, d_range: tuple[float, float], cap: int,
                 exclude: set[int]) -> list[int]:
        n = len(self.nodes)
        dist = np.linalg.norm(self._positions[:n] - point, axis=1)
        ok = self._alive[:n] & (dist >= d_range[0] - _RANGE_TOL) & (dist <= d_range[1] + _RANGE_TOL)
        ids = [i for i in np.nonzero(ok)[0] if i not in exclude]
        ids.sort(key=lambda i: (dist[i], i))
        return ids[:cap]

    def ancestor_ids(self, node: TimedNode) -> set[int]:
        out = set()
        cur = node
        while cur.parent is not None:
            out.add(cur.parent)
            cur = self.nodes[cur.parent]
        return out

    def path_ids(self, node: TimedNode) -> list[int]:
        ids = [node.id]
        while ids and self.nodes[ids[-1]].parent is not None:
            ids.append(self.nodes[ids[-1]].parent)
        return ids[::-1]

    def candidate_signal(self, via: TimedNode, plan: EdgePlan, target: np.ndarray):
        """Prefix signal of routing an existing position through ``via``."""
        times, points = _edge_breaks(via, plan.segments, np.asarray(target, dtype=float),
                                     plan.end_heading, plan.arrival_time)
        return (np.concatenate([via.path_times, times]),
                np.vstack([via.path_positions, points]))

    # --- mutation ---

    def add(self, plan: EdgePlan, parent: TimedNode) -> TimedNode:
        node = TimedNode(id=len(self.nodes), position=plan.end_position,
                         heading=plan.end_heading, time=plan.arrival_time,
                         parent=parent.id, segments=plan.segments)
        if len(self.nodes) >= self._capacity:
            self._grow()
        self._positions[node.id] = node.position
        self._alive[node.id] = True
        self.nodes.append(node)
        parent.children.add(node.id)
        self._refresh_cache(node)
        self._score(node)
        return node

    def reparent(self, node: TimedNode, new_parent: TimedNode,
                 plan: EdgePlan, bank: PolicyBank, rng: np.random.Generator) -> list[int]:
        """Attach ``node`` below ``new_parent`` and repair the whole subtree.

        Arrival times shift, so descendant edges are re-timed, re-checked
        against (timed) obstacles, and re-scored; a descendant whose edge can
        no longer be realized or collides is pruned with its subtree.
        Returns the pruned node ids.
        """
        old_parent = self.nodes[node.parent]
        old_parent.children.discard(node.id)
        heading_changed = abs(wrap_angle(plan.end_heading - node.heading)) > _EXACT_DTHETA
        node.parent = new_parent.id
        node.segments = plan.segments
        node.time = plan.arrival_time
        node.heading = plan.end_heading
        new_parent.children.add(node.id)
        self._refresh_cache(node)
        self._score(node)

        pruned: list[int] = []
        queue = deque((child_id, heading_changed) for child_id in sorted(node.children))
        while queue:
            child_id, realign = queue.popleft()
            child = self.nodes[child_id]
            parent = self.nodes[child.parent]
            ok = True
            if realign:
                # the parent's heading moved: rebuild the rotation leg toward the
                # (unchanged) child position; the translation leg stays valid
                replacement = sample_policies(bank, self.node_state(parent), child.position,
                                              rng, exact=True)
                if replacement is None:
                    ok = False
                else:
                    child.segments = replacement.segments
                    child.time = replacement.arrival_time
                    child.heading = replacement.end_heading
            else:
                child.time = parent.time + sum(s.duration for s in child.segments)
            if ok and not edge_free(self.node_state(parent),
                                    [(s.policy, s.duration) for s in child.segments],
                                    self.scenario):
                ok = False
            if not ok:
                pruned.extend(self._prune(child_id))
                continue
            self._refresh_cache(child)
            self._score(child)
            queue.extend((gc, False) for gc in sorted(child.children))
        return pruned

    def _prune(self, node_id: int) -> list[int]:
        removed = []
        stack = [node_id]
        self.nodes[self.nodes[node_id].parent].children.discard(node_id)
        while stack:
            nid = stack.pop()
            node = self.nodes[nid]
            node.alive = False
            self._alive[nid] = False
            removed.append(nid)
            stack.extend(node.children)
            node.children = set()
        return removed


def node_cost(tree: Tree, node: TimedNode) -> float:
    """Cost recomputed from scratch: accumulated negated prefix robustness."""
    total = 0.0
    for nid in tree.path_ids(node):
        n = tree.nodes[nid]
        total -= tree.prefix_fn(n.path_times, n.path_positions)
    return total


def node_trajectory(tree: Tree, node: TimedNode,
                    prefix: TimedTrajectory | None = None) -> TimedTrajectory:
    """Root-to-node signal with headings, prepended with any realized prefix."""
    samples = []
    for nid in tree.path_ids(node):
        n = tree.nodes[nid]
        if n.parent is None:
            samples.append((n.position, n.heading, n.time))
            continue
        parent = tree.nodes[n.parent]
        if len(n.segments) > 1:
            samples.append((parent.position, n.heading, parent.time + n.segments[0].duration))
        samples.append((n.position, n.heading, n.time))
    traj = TimedTrajectory.from_samples(samples, complete=False)
    if prefix is not None:
        traj = prefix.concatenated(traj)
    return traj


def plan(scenario: Scenario, policies: list[Policy],
         estimators: dict[str, ReachEstimator], d_range: tuple[float, float], *,
         seed: int | None = None, rng: np.random.Generator | None = None,
         max_iteration: int | None = None,
         prefix: TimedTrajectory | None = None) -> PlanResult:
    """Grow the tree for the configured iteration budget and return the
    maximum-robustness satisfying trajectory with its policy schedule.

    Raises PlanningError when no trajectory satisfies the task; the error
    carries the best (negative) robustness found.
    """
    if not policies:
        raise ValueError("empty policy set")
    if not (0.0 < d_range[0] < d_range[1]):
        raise ValueError(f"invalid edge-length range {d_range}")
    if rng is None:
        rng = np.random.default_rng(scenario.planner.seed if seed is None else seed)
    iterations = scenario.planner.max_iteration if max_iteration is None else max_iteration
    settings = scenario.eval_settings()
    formula = scenario.formula
    theta_tol = scenario.planner.theta_tol
    t0 = prefix.start_time if prefix is not None else scenario.start_time

    def prefix_fn(times: np.ndarray, positions: np.ndarray) -> float:
        return prefix_robustness(formula, TimedTrajectory(times, positions, complete=False),
                                 settings)

    bank = PolicyBank.build(policies, estimators)
    tree = Tree(scenario, prefix_fn, prefix_traj=prefix)
    rewires: list[RewireEvent] = []

    for _ in range(iterations):
        w_rnd = sample_free(scenario.workspace, scenario.obstacles, rng)
        parent = tree.nearest(w_rnd)
        if float(np.linalg.norm(w_rnd - parent.position)) < 1e-12:
            continue
        target = steer(w_rnd, parent.position, d_range)
        edge = sample_policies(bank, tree.node_state(parent), target, rng, theta_tol)
        if edge is None:
            continue
        if not edge_free(tree.node_state(parent),
                         [(s.policy, s.duration) for s in edge.segments], scenario):
            continue
        child = tree.add(edge, parent)

        # rewiring: route nearby nodes through the new one when that lowers cost
        exclude = tree.ancestor_ids(child) | {child.id, 0}
        for near_id in tree.near_ids(child.position, d_range,
                                     scenario.planner.rewire_cap, exclude):
            near = tree.nodes[near_id]
            via = sample_policies(bank, tree.node_state(child), near.position, rng, exact=True)
            if via is None:
                continue
            if not edge_free(tree.node_state(child),
                             [(s.policy, s.duration) for s in via.segments], scenario):
                continue
            cand_times, cand_positions = tree.candidate_signal(child, via, near.position)
            cand_cost = child.cost - prefix_fn(cand_times, cand_positions)
            if cand_cost < near.cost:
                rewires.append(RewireEvent(near.id, near.parent, child.id, near.cost, cand_cost))
                tree.reparent(near, child, via, bank, rng)

    # final selection: highest full robustness among satisfying trajectories
    horizon_t = scenario.horizon if prefix is None else max(scenario.horizon, t0)
    best_node, best_rho, best_traj = None, -math.inf, None
    for node in tree.alive_nodes():
        traj = node_trajectory(tree, node, prefix).hold_extended(horizon_t, complete=True)
        rho = robustness(formula, traj, t0, settings)
        if rho > best_rho:
            best_node, best_rho, best_traj = node, rho, traj
    if best_node is None or best_rho < 0.0:
        raise PlanningError(
            f"no satisfying trajectory within {iterations} iterations "
            f"(best robustness {best_rho:.6f})",
            best_robustness=best_rho if math.isfinite(best_rho) else None,
        )

    path = [tree.nodes[nid] for nid in tree.path_ids(best_node)]
    schedule = [seg for node in path for seg in node.segments]
    return PlanResult(nodes=path, schedule=schedule, robustness=best_rho,
                      trajectory=best_traj, iterations=iterations, seed=seed,
                      tree=tree, rewires=rewires)
