"""RL-RRT and its RRT-family baselines (Euclidean selection, DWA steering)."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..dynamics import DIFF_DRIVE, ROBOTS, clamp_action, propagate, robot_kind_of
from ..estimator import ReachabilityEstimator, hypercube_targets
from ..observation import FrameStack, make_observation, make_observations
from ..policy.dwa import DwaPolicy
from ..policy.rollout import pose_of
from ..world import GoalSpec, LidarConfig, OccupancyGrid, lidar_scan, point_free, sample_free_state
from .tree import MotionPlan, Node, Tree, plan_from_tree


@dataclass(frozen=True)
class PlannerConfig:
    p_goal_bias: float = 0.05
    k_c: int = 20
    p_prune: float = 0.9
    ttr_threshold: float | None = None
    dt_policy: float = 0.1
    dt_tree: float = 1.0
    t_max_extend: float | None = None
    time_budget: float | None = 10.0
    max_iterations: int | None = None
    n_ttr_samples: int = 10
    ttr_half_width: float = 0.3
    reach_radius: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.p_goal_bias <= 1.0 and 0.0 <= self.p_prune <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.k_c < 1:
            raise ValueError("k_c must be >= 1")
        ratio = self.dt_tree / self.dt_policy
        if self.dt_policy <= 0 or ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("dt_tree must be a positive multiple of dt_policy")
        if self.time_budget is None and self.max_iterations is None:
            raise ValueError("need a time budget or an iteration budget")

    def resolved(self, robot_kind: str) -> "PlannerConfig":
        """Fill robot-dependent defaults (threshold and extension length = T_horizon)."""
        t_h = ROBOTS[robot_kind].t_horizon
        d = asdict(self)
        d["ttr_threshold"] = t_h if self.ttr_threshold is None else self.ttr_threshold
        d["t_max_extend"] = t_h if self.t_max_extend is None else self.t_max_extend
        return PlannerConfig(**d)

    @property
    def steps_per_node(self) -> int:
        return int(round(self.dt_tree / self.dt_policy))


@dataclass
class Decision:
    sample: int
    x_rnd: tuple
    candidates: tuple
    chosen: int
    ttr: float | None
    pruned: bool
    new_nodes: int = 0


@dataclass
class PlanResult:
    """Outcome of one planning query; a failure carries the search statistics instead of a plan."""

    planner: str
    success: bool
    plan: MotionPlan | None
    tree: Tree
    samples: int = 0
    pruned: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    time_to_solution: float | None = None
    solution_iteration: int | None = None
    trace: list = field(default_factory=list)

    @property
    def tree_size(self) -> int:
        return len(self.tree)

    @property
    def finish_time(self) -> float | None:
        return self.plan.finish_time if self.plan is not None else None

    def report(self) -> dict:
        return {"planner": self.planner, "success": self.success, "tree_size": self.tree_size,
                "samples": self.samples, "pruned": self.pruned, "iterations": self.iterations,
                "wall_time": self.wall_time, "time_to_solution": self.time_to_solution,
                "finish_time": self.finish_time}


# ---------------------------------------------------------------- reachability scorers


class EstimatorScorer:
    """Averaged predicted TTR from each node to targets around ``x_rnd``.

    The same target set is shared by every candidate of one query.
    """

    def __init__(self, estimator: ReachabilityEstimator, n_samples: int = 10, half_width: float = 0.3):
        self.estimator = estimator
        self.n_samples = n_samples
        self.half_width = half_width

    @property
    def robot_kind(self) -> str:
        return self.estimator.robot_kind

    def __call__(self, nodes, x_rnd, rng) -> np.ndarray:
        targets = hypercube_targets(x_rnd, self.n_samples, self.half_width, rng)
        obs = np.concatenate([make_observations(n.state, targets, n.stack) for n in nodes])
        return self.estimator.predict(obs).reshape(len(nodes), self.n_samples).mean(axis=1)


class OracleScorer:
    """Ground-truth rollout TTR from each node to ``x_rnd`` exactly."""

    def __init__(self, oracle):
        self.oracle = oracle

    @property
    def robot_kind(self) -> str:
        return self.oracle.policy.robot_kind

    def __call__(self, nodes, x_rnd, rng) -> np.ndarray:
        return np.array([self.oracle.ttr(n.state, x_rnd) for n in nodes])


def as_scorer(estimator, cfg: PlannerConfig | None = None):
    if isinstance(estimator, ReachabilityEstimator):
        if cfg is None:
            return EstimatorScorer(estimator)
        return EstimatorScorer(estimator, cfg.n_ttr_samples, cfg.ttr_half_width)
    return estimator


# ---------------------------------------------------------------- building blocks


def select_nearest_hierarchical(tree: Tree, x_rnd, estimator, k_c: int, rng) -> tuple[Node, float]:
    """Among the ``k_c`` Euclidean-nearest nodes, the one with the lowest averaged TTR."""
    cand = tree.k_nearest(x_rnd, k_c)
    scores = as_scorer(estimator)([tree.nodes[i] for i in cand], x_rnd, rng)
    best = np.lexsort((cand, scores))[0]
    return tree.nodes[int(cand[best])], float(scores[best])


def select_nearest_euclidean(tree: Tree, x_rnd) -> Node:
    return tree.nodes[int(tree.k_nearest(x_rnd, 1)[0])]


def extend(policy, from_node: Node, x_rnd, grid: OccupancyGrid, cfg: PlannerConfig, rng: np.random.Generator,
           lidar: LidarConfig = LidarConfig(), goal: GoalSpec | None = None) -> list[Node]:
    """Drive ``policy`` from ``from_node`` toward ``x_rnd``, emitting a node every ``dt_tree``.

    Nothing at or after a collision is kept. The extension also stops (and
    keeps the state) when ``x_rnd`` or the planning goal is reached, and it
    stops without a node when a whole insertion period leaves the state
    unchanged, since that node would only duplicate its parent.
    """
    kind = robot_kind_of(from_node.state)
    radius = ROBOTS[kind].radius
    t_max = cfg.t_max_extend if cfg.t_max_extend is not None else ROBOTS[kind].t_horizon
    max_steps = int(round(t_max / cfg.dt_policy))
    every = cfg.steps_per_node
    state = from_node.state
    stack = from_node.stack.copy()
    target = (float(x_rnd[0]), float(x_rnd[1]))
    log, out = [], []
    period_start = state
    for k in range(1, max_steps + 1):
        action = clamp_action(policy.act(make_observation(state, target, stack)), kind)
        state = propagate(state, action, cfg.dt_policy)
        if not point_free(grid, (state.x, state.y), radius):
            break
        stack.push(lidar_scan(grid, pose_of(state), lidar, rng))
        log.append(action)
        reached = math.hypot(state.x - target[0], state.y - target[1]) < cfg.reach_radius
        if goal is not None and goal.reached(state.x, state.y):
            reached = True
        if k % every == 0 and not reached and state == period_start:
            break
        if k % every == 0 or reached:
            period_start = state
            out.append(Node(state, target=target, steps=from_node.steps + k, action_log=log, stack=stack.copy()))
            log = []
        if reached:
            break
    return out


def _root_node(grid, root_state, lidar, rng) -> Node:
    radius = ROBOTS[robot_kind_of(root_state)].radius
    if not point_free(grid, (root_state.x, root_state.y), radius):
        raise ValueError(f"root state {root_state} is in collision")
    return Node(root_state, stack=FrameStack([lidar_scan(grid, pose_of(root_state), lidar, rng)]))


def planner_rngs(seed: int) -> tuple:
    """Independent streams for sampling, TTR queries and extension noise."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


class _Budget:
    def __init__(self, cfg: PlannerConfig):
        self.t0 = time.perf_counter()
        self.cfg = cfg

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def exhausted(self, iterations: int) -> bool:
        if self.cfg.max_iterations is not None and iterations >= self.cfg.max_iterations:
            return True
        return self.cfg.time_budget is not None and self.elapsed() >= self.cfg.time_budget


def _rrt_loop(name, grid, root_state, goal, policy, cfg, seed, lidar, scorer=None, k_c=None, prune=True):
    kind = robot_kind_of(root_state)
    cfg = cfg.resolved(kind)
    rng_sample, rng_ttr, rng_ext = planner_rngs(seed)
    tree = Tree(_root_node(grid, root_state, lidar, rng_ext), cfg.dt_policy)
    res = PlanResult(name, False, None, tree)
    budget = _Budget(cfg)
    config = {"planner": name, **asdict(cfg), "seed": seed}

    def finish(node_id):
        res.success = True
        res.plan = plan_from_tree(tree, node_id, name, seed, config)
        res.time_to_solution = budget.elapsed()
        res.solution_iteration = res.iterations

    if goal.reached(root_state.x, root_state.y):
        finish(0)
    k_c = cfg.k_c if k_c is None else k_c
    while not res.success and not budget.exhausted(res.iterations):
        res.iterations += 1
        x = sample_free_state(grid, kind, rng_sample, goal, cfg.p_goal_bias)
        x_rnd = (float(x.x), float(x.y))
        res.samples += 1
        if scorer is None:
            node, ttr = select_nearest_euclidean(tree, x_rnd), None
            cand = (node.id,)
        else:
            cand = tuple(int(i) for i in tree.k_nearest(x_rnd, k_c))
            node, ttr = select_nearest_hierarchical(tree, x_rnd, scorer, k_c, rng_ttr)
        decision = Decision(res.samples, x_rnd, cand, node.id, ttr, False)
        res.trace.append(decision)
        if prune and ttr is not None and ttr >= cfg.ttr_threshold and rng_ttr.random() < cfg.p_prune:
            decision.pruned = True
            res.pruned += 1
            continue
        new = tree.add_chain(extend(policy, node, x_rnd, grid, cfg, rng_ext, lidar, goal), node.id)
        decision.new_nodes = len(new)
        for n in new:
            if goal.reached(n.state.x, n.state.y):
                finish(n.id)
                break
    res.wall_time = budget.elapsed()
    return res


def _check_kinds(root_state, *parts):
    kind = robot_kind_of(root_state)
    for p in parts:
        other = getattr(p, "robot_kind", kind)
        if other != kind:
            raise ValueError(f"{type(p).__name__} is for {other}, root is {kind}")


# ---------------------------------------------------------------- planners


def rl_rrt(grid: OccupancyGrid, root_state, goal: GoalSpec, policy, estimator, cfg: PlannerConfig = PlannerConfig(),
           seed: int | None = None, lidar: LidarConfig = LidarConfig()) -> PlanResult:
    """RRT whose steering is the policy and whose selection and pruning use reachability."""
    scorer = as_scorer(estimator, cfg)
    _check_kinds(root_state, policy, scorer)
    return _rrt_loop("rl_rrt", grid, root_state, goal, policy, cfg, cfg.seed if seed is None else seed, lidar,
                     scorer)


def rl_rrt_euclidean(grid: OccupancyGrid, root_state, goal: GoalSpec, policy, estimator=None,
                     cfg: PlannerConfig = PlannerConfig(), seed: int | None = None,
                     lidar: LidarConfig = LidarConfig()) -> PlanResult:
    """Same loop with Euclidean nearest-node selection and no pruning; ``estimator`` is never queried."""
    _check_kinds(root_state, policy)
    return _rrt_loop("rl_rrt_e", grid, root_state, goal, policy, cfg, cfg.seed if seed is None else seed, lidar)


STEERING = {"dwa": True, "dwa_no_clearance": False}


def rrt_steer_plan(grid: OccupancyGrid, root_state, goal: GoalSpec, steering: str = "dwa",
                   cfg: PlannerConfig = PlannerConfig(), seed: int | None = None,
                   lidar: LidarConfig = LidarConfig()) -> PlanResult:
    """RRT with Euclidean nearest neighbor and DWA extension (clearance on: RRT-DW, off: RRT-S)."""
    if robot_kind_of(root_state) != DIFF_DRIVE:
        raise ValueError("DWA steering is only defined for the differential-drive robot")
    if steering not in STEERING:
        raise ValueError(f"steering must be one of {sorted(STEERING)}")
    policy = DwaPolicy(lidar, enable_clearance=STEERING[steering])
    name = "rrt_dw" if STEERING[steering] else "rrt_s"
    return _rrt_loop(name, grid, root_state, goal, policy, cfg, cfg.seed if seed is None else seed, lidar)
