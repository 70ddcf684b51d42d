"""Timed trajectories: the signals that robustness is evaluated on."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Sanity bound on coordinates; this is not a workspace-containment check.
AMBIENT_BOUND = 1.0e6


class TrajectoryError(ValueError):
    pass


@dataclass
class TimedTrajectory:
    """Ordered (position, heading, time) samples with linear interpolation.

    ``complete`` marks a finished plan/trace; growing tree prefixes carry
    ``complete=False``.
    """

    times: np.ndarray
    positions: np.ndarray
    headings: np.ndarray | None = None
    complete: bool = True

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[0] != self.times.shape[0]:
            raise TrajectoryError("positions must be (n, m) matching n times")
        if self.times.size == 0:
            raise TrajectoryError("trajectory needs at least one sample")
        if self.headings is None:
            self.headings = np.zeros(self.times.shape[0])
        else:
            self.headings = np.asarray(self.headings, dtype=float)
            if self.headings.shape != self.times.shape:
                raise TrajectoryError("headings must match times")
        if np.any(np.diff(self.times) <= 0.0):
            raise TrajectoryError("sample times must be strictly increasing")
        if not np.all(np.isfinite(self.times)) or not np.all(np.isfinite(self.positions)):
            raise TrajectoryError("samples must be finite")
        if np.any(np.abs(self.positions) > AMBIENT_BOUND):
            raise TrajectoryError(f"positions exceed the ambient bound {AMBIENT_BOUND:g}")

    @classmethod
    def from_samples(cls, samples, complete: bool = True) -> "TimedTrajectory":
        """Build from an iterable of (position, heading, time) tuples."""
        positions = np.array([np.asarray(p, dtype=float) for p, _, _ in samples])
        headings = np.array([float(h) for _, h, _ in samples])
        times = np.array([float(t) for _, _, t in samples])
        return cls(times=times, positions=positions, headings=headings, complete=complete)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def dim(self) -> int:
        return int(self.positions.shape[1])

    @property
    def start_time(self) -> float:
        return float(self.times[0])

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    def positions_at(self, query: np.ndarray) -> np.ndarray:
        """Linearly interpolated positions; clamps outside the sampled span."""
        query = np.asarray(query, dtype=float)
        out = np.empty(query.shape + (self.dim,))
        for d in range(self.dim):
            out[..., d] = np.interp(query, self.times, self.positions[:, d])
        return out

    def hold_extended(self, t_final: float, complete: bool = True) -> "TimedTrajectory":
        """Append a stop-and-hold sample at ``t_final`` (no-op if already covered)."""
        if t_final <= self.end_time + 1e-12:
            if complete == self.complete:
                return self
            return TimedTrajectory(self.times, self.positions, self.headings, complete=complete)
        times = np.append(self.times, t_final)
        positions = np.vstack([self.positions, self.positions[-1]])
        headings = np.append(self.headings, self.headings[-1])
        return TimedTrajectory(times, positions, headings, complete=complete)

    def concatenated(self, other: "TimedTrajectory") -> "TimedTrajectory":
        """Join with ``other``; a duplicated splice sample at the seam is dropped."""
        if other.start_time < self.end_time - 1e-12:
            raise TrajectoryError("concatenation would move backwards in time")
        skip = 1 if abs(other.start_time - self.end_time) <= 1e-12 else 0
        return TimedTrajectory(
            np.concatenate([self.times, other.times[skip:]]),
            np.vstack([self.positions, other.positions[skip:]]),
            np.concatenate([self.headings, other.headings[skip:]]),
            complete=other.complete,
        )
