"""Search tree, motion plans and plan replay checks shared by all planners."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import DEFAULT_PARAMS, ROBOTS, DynamicsParams, propagate, robot_kind_of, state_from_list
from ..observation import FrameStack
from ..world import GoalSpec, OccupancyGrid, point_free


@dataclass(eq=False)
class Node:
    state: tuple
    parent: int | None = None
    target: tuple | None = None
    steps: int = 0
    action_log: list = field(default_factory=list)
    stack: FrameStack | None = None
    id: int = -1
    cost: float = 0.0
    active: bool = True

    def arrival_time(self, dt: float) -> float:
        return self.steps * dt


class Tree:
    """Nodes in insertion order with a brute-force planar k-nearest query."""

    def __init__(self, root: Node, dt: float):
        if root.parent is not None:
            raise ValueError("root must not have a parent")
        self.dt = dt
        self.nodes: list[Node] = []
        self._xy = np.empty((64, 2))
        self._children: list[list[int]] = []
        self._insert(root)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> Node:
        return self.nodes[0]

    @property
    def xy(self) -> np.ndarray:
        return self._xy[: len(self.nodes)]

    def _insert(self, node: Node) -> Node:
        n = len(self.nodes)
        if n == self._xy.shape[0]:
            self._xy = np.concatenate([self._xy, np.empty_like(self._xy)])
        node.id = n
        self._xy[n] = (node.state.x, node.state.y)
        self.nodes.append(node)
        self._children.append([])
        if node.parent is not None:
            self._children[node.parent].append(n)
        return node

    def add(self, node: Node, parent: int) -> Node:
        if not 0 <= parent < len(self.nodes):
            raise IndexError(f"parent {parent} not in tree")
        node.parent = parent
        return self._insert(node)

    def add_chain(self, nodes, parent: int) -> list[Node]:
        """Insert ``nodes`` so each one's parent is the one before it."""
        out = []
        for n in nodes:
            parent = self.add(n, parent).id
            out.append(n)
        return out

    def children(self, node_id: int) -> list[int]:
        return self._children[node_id]

    def detach_leaf(self, node_id: int) -> None:
        """Mark a childless node as removed from its parent's child list."""
        node = self.nodes[node_id]
        if self._children[node_id]:
            raise ValueError("only leaves can be detached")
        if node.parent is not None:
            self._children[node.parent].remove(node_id)
        node.parent = None
        node.active = False
        self._xy[node_id] = np.inf

    def k_nearest(self, xy, k: int, mask=None) -> np.ndarray:
        """Ids of the ``k`` nodes nearest to ``xy``, ordered by (distance, id)."""
        d = np.hypot(self.xy[:, 0] - xy[0], self.xy[:, 1] - xy[1])
        if mask is not None:
            d = np.where(mask, d, np.inf)
        ids = np.arange(d.shape[0])
        valid = np.isfinite(d)
        ids, d = ids[valid], d[valid]
        order = np.lexsort((ids, d))
        return ids[order[:k]]

    def within(self, xy, radius: float) -> np.ndarray:
        d = np.hypot(self.xy[:, 0] - xy[0], self.xy[:, 1] - xy[1])
        return np.flatnonzero(d <= radius)

    def path_to(self, node_id: int) -> list[Node]:
        chain = []
        seen = set()
        cur = node_id
        while cur is not None:
            if cur in seen:
                raise RuntimeError("cycle in tree")
            seen.add(cur)
            chain.append(self.nodes[cur])
            cur = self.nodes[cur].parent
        if chain[-1].id != 0:
            raise RuntimeError(f"node {node_id} is not connected to the root")
        return chain[::-1]

    def check_consistency(self) -> None:
        """Raise unless the root is unique and every live node reaches it."""
        roots = [n.id for n in self.nodes if n.parent is None and np.isfinite(self._xy[n.id, 0])]
        if roots != [0]:
            raise RuntimeError(f"expected exactly one root, found {roots}")
        for n in self.nodes:
            if n.parent is not None:
                if n.parent >= n.id:
                    raise RuntimeError(f"node {n.id} has parent {n.parent} inserted after it")
                if n.id not in self._children[n.parent]:
                    raise RuntimeError(f"node {n.id} missing from its parent's children")

    def edges(self) -> list[tuple[int, int]]:
        return [(n.parent, n.id) for n in self.nodes if n.parent is not None]

    def dump(self) -> dict:
        return {
            "nodes": [[n.id, float(n.state.x), float(n.state.y),
                       -1 if n.parent is None else n.parent] for n in self.nodes if np.isfinite(self._xy[n.id, 0])],
            "edges": [list(e) for e in self.edges()],
        }


@dataclass
class MotionPlan:
    """Node chain from root to goal plus the actions (one per ``dt``) between nodes."""

    states: list
    segments: list
    dt: float
    planner: str = ""
    seed: int = 0
    config: dict = field(default_factory=dict)

    @property
    def actions(self) -> list:
        return [a for seg in self.segments for a in seg]

    @property
    def times(self) -> list:
        out, k = [0.0], 0
        for seg in self.segments:
            k += len(seg)
            out.append(k * self.dt)
        return out

    @property
    def finish_time(self) -> float:
        return sum(len(s) for s in self.segments) * self.dt

    @property
    def robot_kind(self) -> str:
        return robot_kind_of(self.states[0])

    def to_dict(self) -> dict:
        return {
            "planner": self.planner, "seed": self.seed, "robot_kind": self.robot_kind, "dt": self.dt,
            "finish_time": self.finish_time, "times": self.times,
            "states": [[float(v) for v in s] for s in self.states],
            "segments": [[[float(a[0]), float(a[1])] for a in seg] for seg in self.segments],
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MotionPlan":
        kind = d["robot_kind"]
        return cls([state_from_list(kind, s) for s in d["states"]],
                   [[tuple(a) for a in seg] for seg in d["segments"]], d["dt"], d.get("planner", ""),
                   d.get("seed", 0), d.get("config", {}))

    @classmethod
    def from_json(cls, text: str) -> "MotionPlan":
        return cls.from_dict(json.loads(text))


def plan_from_tree(tree: Tree, node_id: int, planner: str, seed: int, config: dict) -> MotionPlan:
    chain = tree.path_to(node_id)
    return MotionPlan([n.state for n in chain], [list(n.action_log) for n in chain[1:]], tree.dt, planner, seed,
                      config)


def replay(plan: MotionPlan, params: DynamicsParams = DEFAULT_PARAMS) -> list[list]:
    """Dense states per segment, recomputed from the first node through ``propagate``."""
    state = plan.states[0]
    out = []
    for seg in plan.segments:
        dense = []
        for a in seg:
            state = propagate(state, a, plan.dt, params)
            dense.append(state)
        out.append(dense)
    return out


def validate_plan(plan: MotionPlan, grid: OccupancyGrid, goal: GoalSpec | None = None, tol: float = 1e-9,
                  params: DynamicsParams = DEFAULT_PARAMS) -> list[str]:
    """Problems found when replaying ``plan``; an empty list means it is feasible."""
    problems = []
    radius = ROBOTS[plan.robot_kind].radius
    if len(plan.segments) != len(plan.states) - 1:
        return [f"{len(plan.states)} states but {len(plan.segments)} segments"]
    if not point_free(grid, (plan.states[0].x, plan.states[0].y), radius):
        problems.append("start state in collision")
    state = plan.states[0]
    for i, dense in enumerate(replay(plan, params)):
        for k, s in enumerate(dense):
            if not point_free(grid, (s.x, s.y), radius):
                problems.append(f"segment {i} step {k} in collision at ({s.x:.3f}, {s.y:.3f})")
                break
        end = dense[-1] if dense else state
        err = max(abs(a - b) for a, b in zip(end, plan.states[i + 1]))
        if not err <= tol:
            problems.append(f"node {i + 1} replay error {err:.3e}")
        state = end
    if goal is not None:
        last = plan.states[-1]
        if not goal.reached(last.x, last.y):
            problems.append("final state outside the goal region")
    return problems


def plan_min_clearance(plan: MotionPlan, grid: OccupancyGrid) -> float:
    """Smallest distance (m) from the robot center to an occupied cell center along the replayed plan."""
    clearance = grid._center_clearance
    pts = [plan.states[0]] + [s for seg in replay(plan) for s in seg]
    best = math.inf
    for s in pts:
        i, j = grid.cell_of(s.x, s.y)
        i = min(max(i, 0), grid.width_cells - 1)
        j = min(max(j, 0), grid.height_cells - 1)
        best = min(best, float(clearance[j, i]))
    return best


def plan_length(plan: MotionPlan) -> float:
    pts = [plan.states[0]] + [s for seg in replay(plan) for s in seg]
    return float(sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(pts, pts[1:])))
