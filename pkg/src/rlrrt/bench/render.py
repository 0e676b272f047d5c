"""Deterministic SVG drawings of maps, search trees and plans."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import quoteattr

from ..planner.tree import MotionPlan, Tree, replay
from ..world import OccupancyGrid

TREE_STYLES = ("#d4a017", "#1f5fbf", "#c0392b", "#8e44ad", "#16a085")
PLAN_STYLES = ("#000000", "#0b3d91", "#7f1d1d", "#4a235a", "#0e6251")
SCALE = 20.0


def _f(v: float) -> str:
    return f"{v:.2f}"


def _obstacle_rects(grid: OccupancyGrid):
    """Merge occupied cells into horizontal runs, top row first."""
    res = grid.resolution
    for j in range(grid.height_cells - 1, -1, -1):
        row = grid.cells[j]
        i = 0
        while i < grid.width_cells:
            if row[i]:
                k = i
                while k < grid.width_cells and row[k]:
                    k += 1
                yield i * res, j * res, (k - i) * res, res
                i = k
            else:
                i += 1


def _tree_segments(tree):
    if isinstance(tree, Tree):
        tree = tree.dump()
    xy = {n[0]: (n[1], n[2]) for n in tree["nodes"]}
    return [(xy[a], xy[b]) for a, b in tree["edges"] if a in xy and b in xy]


def render_svg(grid: OccupancyGrid, trees=None, plans=None, out_path=None, start=None, goal=None) -> str:
    """Write (and return) an SVG of ``grid`` with optional trees and plans.

    ``trees`` and ``plans`` map a planner name to a Tree (or its dump) and a
    MotionPlan. Each planner gets its own color; y points up as in the map.
    """
    trees = trees or {}
    plans = plans or {}
    w, h = grid.extent
    W, H = w * SCALE, h * SCALE
    tx = lambda x: _f(x * SCALE)
    ty = lambda y: _f(H - y * SCALE)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(W)}" height="{_f(H)}" viewBox="0 0 {_f(W)} {_f(H)}">',
        f'<rect x="0" y="0" width="{_f(W)}" height="{_f(H)}" fill="#ffffff"/>',
        '<g id="obstacles" fill="#333333">',
    ]
    for x, y, rw, rh in _obstacle_rects(grid):
        out.append(f'<rect x="{tx(x)}" y="{ty(y + rh)}" width="{_f(rw * SCALE)}" height="{_f(rh * SCALE)}"/>')
    out.append("</g>")
    for k, name in enumerate(sorted(trees)):
        color = TREE_STYLES[k % len(TREE_STYLES)]
        out.append(f'<g id={quoteattr("tree-" + name)} stroke="{color}" stroke-width="1" fill="none">')
        for (x0, y0), (x1, y1) in _tree_segments(trees[name]):
            out.append(f'<line x1="{tx(x0)}" y1="{ty(y0)}" x2="{tx(x1)}" y2="{ty(y1)}"/>')
        out.append("</g>")
    for k, name in enumerate(sorted(plans)):
        plan: MotionPlan = plans[name]
        pts = [plan.states[0]] + [s for seg in replay(plan) for s in seg]
        coords = " ".join(f"{tx(s.x)},{ty(s.y)}" for s in pts)
        color = PLAN_STYLES[k % len(PLAN_STYLES)]
        out.append(f'<polyline id={quoteattr("plan-" + name)} points="{coords}" stroke="{color}" '
                   f'stroke-width="3" fill="none"/>')
    if start is not None:
        out.append(f'<circle id="start" cx="{tx(start[0])}" cy="{ty(start[1])}" r="6" fill="#2e7d32"/>')
    if goal is not None:
        gx, gy = getattr(goal, "position", goal)
        r = getattr(goal, "radius_dG", 0.5) * SCALE
        out.append(f'<circle id="goal" cx="{tx(gx)}" cy="{ty(gy)}" r="{_f(r)}" fill="none" stroke="#c62828" '
                   f'stroke-width="3"/>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text)
    return text
