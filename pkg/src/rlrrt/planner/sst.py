"""Stable Sparse RRT: best-near selection, random control propagation, witness pruning."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from ..dynamics import ROBOTS, clamp_action, propagate, robot_kind_of
from ..world import GoalSpec, OccupancyGrid, point_free, sample_free_state
from .rrt import PlanResult, planner_rngs
from .tree import Node, Tree, plan_from_tree


@dataclass(frozen=True)
class SstConfig:
    delta_bn: float = 2.0
    delta_s: float = 0.5
    t_prop_min: float = 0.5
    t_prop_max: float = 3.0
    p_goal_bias: float = 0.05
    dt_policy: float = 0.1
    time_budget: float | None = 10.0
    max_iterations: int | None = None
    stop_at_first: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.delta_s <= self.delta_bn:
            raise ValueError("need 0 < delta_s <= delta_bn")
        if not 0 < self.t_prop_min <= self.t_prop_max or self.dt_policy <= 0:
            raise ValueError("propagation durations must be positive and ordered")
        if self.time_budget is None and self.max_iterations is None:
            raise ValueError("need a time budget or an iteration budget")


class _Witnesses:
    def __init__(self):
        self.xy = np.empty((0, 2))
        self.rep: list[int] = []

    def nearest(self, xy) -> tuple[int, float]:
        if not self.rep:
            return -1, np.inf
        d = np.hypot(self.xy[:, 0] - xy[0], self.xy[:, 1] - xy[1])
        i = int(np.argmin(d))
        return i, float(d[i])

    def add(self, xy, rep: int) -> int:
        self.xy = np.vstack([self.xy, xy])
        self.rep.append(rep)
        return len(self.rep) - 1


def _prune_branch(tree: Tree, node_id: int) -> None:
    """Remove inactive leaves walking up from ``node_id``."""
    cur = node_id
    while cur is not None and cur != 0:
        node = tree.nodes[cur]
        if node.active or tree.children(cur):
            return
        parent = node.parent
        tree.detach_leaf(cur)
        cur = parent


def sst_plan(grid: OccupancyGrid, root_state, goal: GoalSpec, robot_kind: str | None = None,
             cfg: SstConfig = SstConfig(), seed: int | None = None) -> PlanResult:
    """Grow an SST forest; return the cheapest goal-reaching plan found within the budget."""
    kind = robot_kind or robot_kind_of(root_state)
    if kind != robot_kind_of(root_state):
        raise ValueError(f"root state is not a {kind} state")
    seed = cfg.seed if seed is None else seed
    spec = ROBOTS[kind]
    if not point_free(grid, (root_state.x, root_state.y), spec.radius):
        raise ValueError(f"root state {root_state} is in collision")
    rng, _, _ = planner_rngs(seed)
    low, high = np.array(spec.action_low), np.array(spec.action_high)
    k_min = max(1, int(round(cfg.t_prop_min / cfg.dt_policy)))
    k_max = max(k_min, int(round(cfg.t_prop_max / cfg.dt_policy)))
    tree = Tree(Node(root_state), cfg.dt_policy)
    wit = _Witnesses()
    wit.add((root_state.x, root_state.y), 0)
    res = PlanResult("sst", False, None, tree)
    config = {"planner": "sst", **asdict(cfg), "seed": seed}
    t0 = time.perf_counter()

    def out_of_budget():
        if cfg.max_iterations is not None and res.iterations >= cfg.max_iterations:
            return True
        return cfg.time_budget is not None and time.perf_counter() - t0 >= cfg.time_budget

    if goal.reached(root_state.x, root_state.y):
        res.success = True
        res.plan = plan_from_tree(tree, 0, "sst", seed, config)
        res.time_to_solution = 0.0
        res.solution_iteration = 0
    best_cost = 0 if res.success else None
    active = np.zeros(64, dtype=bool)
    active[0] = True
    while not (res.success and (cfg.stop_at_first or best_cost == 0)) and not out_of_budget():
        res.iterations += 1
        res.samples += 1
        x = sample_free_state(grid, kind, rng, goal, cfg.p_goal_bias)
        mask = active[: len(tree)]
        near = [i for i in tree.within((x.x, x.y), cfg.delta_bn) if mask[i]]
        if near:
            parent = tree.nodes[min(near, key=lambda i: (tree.nodes[i].steps, i))]
        else:
            parent = tree.nodes[int(tree.k_nearest((x.x, x.y), 1, mask)[0])]
        action = clamp_action(rng.uniform(low, high), kind)
        n_steps = int(rng.integers(k_min, k_max + 1))
        state, log, ok, hit_goal = parent.state, [], True, False
        for _ in range(n_steps):
            state = propagate(state, action, cfg.dt_policy)
            if not point_free(grid, (state.x, state.y), spec.radius):
                ok = False
                break
            log.append(action)
            if goal.reached(state.x, state.y):
                hit_goal = True
                break
        if not ok:
            continue
        steps = parent.steps + len(log)
        w, dist = wit.nearest((state.x, state.y))
        if dist > cfg.delta_s:
            w = wit.add((state.x, state.y), -1)
        rep = wit.rep[w]
        if rep >= 0 and tree.nodes[rep].steps <= steps:
            continue
        node = tree.add(Node(state, target=(float(x.x), float(x.y)), steps=steps, action_log=log), parent.id)
        if node.id >= active.shape[0]:
            active = np.concatenate([active, np.zeros_like(active)])
        active[node.id] = True
        wit.rep[w] = node.id
        if rep >= 0:
            tree.nodes[rep].active = False
            active[rep] = False
            _prune_branch(tree, rep)
        if hit_goal and (best_cost is None or steps < best_cost):
            best_cost = steps
            res.plan = plan_from_tree(tree, node.id, "sst", seed, config)
            if not res.success:
                res.success = True
                res.time_to_solution = time.perf_counter() - t0
                res.solution_iteration = res.iterations
    res.wall_time = time.perf_counter() - t0
    return res
