"""CSV / JSON artifacts written by the command line (and read back for
re-execution and standalone robustness checks)."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .planner import EdgeSegment, PlanResult, TimedNode
from .primitives import Policy
from .trajectory import TimedTrajectory

PLAN_HEADER = ["node_index", "x", "y", "heading", "t", "incoming_policy_ids",
               "incoming_durations"]
TRACE_HEADER = ["t", "x", "y", "heading", "event"]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_plan_csv(path: str | Path, result: PlanResult) -> None:
    """One row per plan node; a trailing hold row (no incoming legs) covers
    the span between the last node and the formula horizon."""
    rows = []
    for idx, node in enumerate(result.nodes):
        rows.append([
            str(idx), _fmt(node.position[0]), _fmt(node.position[1]),
            _fmt(node.heading), _fmt(node.time),
            ";".join(s.policy.id for s in node.segments),
            ";".join(_fmt(s.duration) for s in node.segments),
        ])
    last = result.nodes[-1]
    end_time = result.trajectory.end_time
    if end_time > last.time + 1e-12:
        rows.append([str(len(result.nodes)), _fmt(last.position[0]), _fmt(last.position[1]),
                     _fmt(last.heading), _fmt(end_time), "", ""])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLAN_HEADER)
        writer.writerows(rows)


@dataclass
class LoadedPlan:
    """A plan CSV read back: enough structure to re-execute it."""

    nodes: list[TimedNode]
    schedule: list[EdgeSegment]
    hold_time: float | None = None

    def as_result(self) -> PlanResult:
        samples = []
        for node in self.nodes:
            if node.parent is not None and len(node.segments) > 1:
                parent = self.nodes[node.parent]
                samples.append((parent.position, node.heading,
                                parent.time + node.segments[0].duration))
            samples.append((node.position, node.heading, node.time))
        traj = TimedTrajectory.from_samples(samples, complete=True)
        if self.hold_time is not None:
            traj = traj.hold_extended(self.hold_time)
        return PlanResult(nodes=self.nodes, schedule=self.schedule, robustness=float("nan"),
                          trajectory=traj, iterations=0, seed=None, tree=None, rewires=[])


def read_plan_csv(path: str | Path, policies: list[Policy]) -> LoadedPlan:
    by_id = {p.id: p for p in policies}
    nodes: list[TimedNode] = []
    hold_time = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PLAN_HEADER:
            raise ValueError(f"{path}: not a plan CSV (header {reader.fieldnames})")
        for row in reader:
            ids = [s for s in row["incoming_policy_ids"].split(";") if s]
            durations = [float(s) for s in row["incoming_durations"].split(";") if s]
            position = np.array([float(row["x"]), float(row["y"])])
            if not ids and nodes:
                hold_time = float(row["t"])  # trailing stop-and-hold row
                continue
            segments = tuple(EdgeSegment(by_id[pid], dur) for pid, dur in zip(ids, durations))
            nodes.append(TimedNode(
                id=len(nodes), position=position, heading=float(row["heading"]),
                time=float(row["t"]), parent=len(nodes) - 1 if nodes else None,
                segments=segments,
            ))
    if not nodes:
        raise ValueError(f"{path}: empty plan")
    schedule = [seg for node in nodes for seg in node.segments]
    return LoadedPlan(nodes=nodes, schedule=schedule, hold_time=hold_time)


def write_trace_csv(path: str | Path, trajectory: TimedTrajectory,
                    events: list[tuple[float, str]] | None = None) -> None:
    """Movement samples plus one row per event (events repeat the state at
    their time, so rows stay self-contained)."""
    events = sorted(events or [], key=lambda e: e[0])
    rows = []
    eidx = 0
    for i in range(len(trajectory)):
        t = float(trajectory.times[i])
        while eidx < len(events) and events[eidx][0] <= t + 1e-12:
            et, kind = events[eidx]
            pos = trajectory.positions_at(np.array([et]))[0]
            rows.append([_fmt(et), _fmt(pos[0]), _fmt(pos[1]),
                         _fmt(trajectory.headings[i]), kind])
            eidx += 1
        rows.append([_fmt(t), _fmt(trajectory.positions[i][0]),
                     _fmt(trajectory.positions[i][1]), _fmt(trajectory.headings[i]), ""])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        writer.writerows(rows)


def read_trace_csv(path: str | Path) -> TimedTrajectory:
    """Rebuild the movement signal from a trace or plan CSV."""
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if not {"t", "x", "y"}.issubset(fields):
            raise ValueError(f"{path}: need at least t,x,y columns, found {fields}")
        for row in reader:
            t = float(row["t"])
            if samples and t <= samples[-1][2] + 1e-12:
                continue  # event rows duplicate the state at their time
            heading = float(row["heading"]) if row.get("heading") else 0.0
            samples.append((np.array([float(row["x"]), float(row["y"])]), heading, t))
    if not samples:
        raise ValueError(f"{path}: no samples")
    return TimedTrajectory.from_samples(samples, complete=True)


@dataclass
class RunReport:
    scenario: str
    seed: int | None
    wall_time_s: float
    iterations: int
    plan_robustness: float | None
    executed_robustness: float | None = None
    replans: int | None = None
    outputs: dict[str, str] = field(default_factory=dict)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
