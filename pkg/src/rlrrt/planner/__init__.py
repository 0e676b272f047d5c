"""Sampling-based kinodynamic planners: RL-RRT and baselines."""

from .rrt import (
    Decision,
    EstimatorScorer,
    OracleScorer,
    PlannerConfig,
    PlanResult,
    extend,
    planner_rngs,
    rl_rrt,
    rl_rrt_euclidean,
    rrt_steer_plan,
    select_nearest_euclidean,
    select_nearest_hierarchical,
)
from .sst import SstConfig, sst_plan
from .tree import MotionPlan, Node, Tree, plan_from_tree, plan_length, plan_min_clearance, replay, validate_plan

PLANNERS = ("rl_rrt", "rl_rrt_e", "sst", "rrt_dw", "rrt_s")
