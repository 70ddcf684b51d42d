"""Self-contained SVG rendering of scenarios and trajectories."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .stl import Always, BallDistance, Eventually, Not, Predicate, iter_nodes
from .trajectory import TimedTrajectory
from .world import Scenario

_SCALE = 180.0  # px per meter
_MARGIN = 40.0


def _formula_discs(scenario: Scenario):
    """Ball atoms under a timed operator, for goal/keep-out shading."""
    discs = []
    for node in iter_nodes(scenario.formula):
        if not isinstance(node, (Always, Eventually)):
            continue
        for sub in iter_nodes(node.child):
            inner = sub
            negated = False
            while isinstance(inner, Not):
                negated = not negated
                inner = inner.child
            if isinstance(inner, Predicate) and isinstance(inner.atom, BallDistance):
                inside = inner.atom.inside ^ negated
                goal = inside == isinstance(node, Eventually) or \
                    (inside and isinstance(node, Always))
                discs.append((inner.atom.center, inner.atom.radius, node.interval, goal and inside))
    return discs


class _Canvas:
    def __init__(self, scenario: Scenario):
        self.lo = np.asarray(scenario.workspace.lower)
        self.hi = np.asarray(scenario.workspace.upper)
        extent = self.hi - self.lo
        self.width = extent[0] * _SCALE + 2 * _MARGIN
        self.height = extent[1] * _SCALE + 2 * _MARGIN

    def pt(self, p) -> tuple[float, float]:
        x = _MARGIN + (p[0] - self.lo[0]) * _SCALE
        y = self.height - _MARGIN - (p[1] - self.lo[1]) * _SCALE
        return x, y


def render_svg(path: str | Path, scenario: Scenario,
               trajectories: list[tuple[str, str, TimedTrajectory]],
               title: str | None = None) -> None:
    """Workspace, obstacles (timed ones annotated with their window),
    formula goal/keep-out discs, and one labelled polyline per trajectory."""
    cv = _Canvas(scenario)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{cv.width:.0f}" '
        f'height="{cv.height:.0f}" viewBox="0 0 {cv.width:.0f} {cv.height:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    x0, y0 = cv.pt(cv.lo)
    x1, y1 = cv.pt(cv.hi)
    parts.append(f'<rect x="{min(x0, x1):.1f}" y="{min(y0, y1):.1f}" '
                 f'width="{abs(x1 - x0):.1f}" height="{abs(y1 - y0):.1f}" '
                 f'fill="none" stroke="black" stroke-width="2"/>')
    if title:
        parts.append(f'<text x="{_MARGIN:.0f}" y="24" font-size="16" '
                     f'font-family="sans-serif">{title}</text>')

    for center, radius, interval, is_goal in _formula_discs(scenario):
        cx, cy = cv.pt(center)
        color = "#2a9d2a" if is_goal else "#cc3333"
        parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{radius * _SCALE:.1f}" '
                     f'fill="{color}" fill-opacity="0.12" stroke="{color}" '
                     f'stroke-dasharray="6 4"/>')
        parts.append(f'<text x="{cx:.1f}" y="{cy:.1f}" font-size="11" fill="{color}" '
                     f'text-anchor="middle" font-family="sans-serif">'
                     f'[{interval.t1:g},{interval.t2:g}]</text>')

    for obs in scenario.obstacles:
        cx, cy = cv.pt(obs.center)
        if obs.is_timed:
            parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{obs.radius * _SCALE:.1f}" '
                         f'fill="#777777" fill-opacity="0.25" stroke="#555555" '
                         f'stroke-dasharray="4 4"/>')
            parts.append(f'<text x="{cx:.1f}" y="{cy + 14:.1f}" font-size="11" fill="#333333" '
                         f'text-anchor="middle" font-family="sans-serif">'
                         f't&#8712;[{obs.active.t1:g},{obs.active.t2:g}]</text>')
        else:
            parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{obs.radius * _SCALE:.1f}" '
                         f'fill="#777777" fill-opacity="0.55" stroke="#444444"/>')

    legend_y = 40
    for label, color, traj in trajectories:
        pts = " ".join(f"{cv.pt(p)[0]:.1f},{cv.pt(p)[1]:.1f}" for p in traj.positions)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        step = max(1, len(traj) // 24)  # label at most ~24 nodes
        for i in range(0, len(traj), step):
            x, y = cv.pt(traj.positions[i])
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
            parts.append(f'<text x="{x + 5:.1f}" y="{y - 4:.1f}" font-size="10" '
                         f'fill="{color}" font-family="sans-serif">'
                         f'{traj.times[i]:.1f}</text>')
        parts.append(f'<text x="{cv.width - _MARGIN:.0f}" y="{legend_y}" font-size="13" '
                     f'fill="{color}" text-anchor="end" font-family="sans-serif">'
                     f'{label}</text>')
        legend_y += 18

    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
