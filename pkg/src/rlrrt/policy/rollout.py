"""Episode execution for any local planner policy."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import DEFAULT_PARAMS, ROBOTS, DynamicsParams, clamp_action, propagate, robot_kind_of
from ..observation import FrameStack, make_observation
from ..world import GoalSpec, LidarConfig, OccupancyGrid, lidar_scan, point_free
from .rewards import compute_reward

REACHED = "reached"
COLLIDED = "collided"
TIMEOUT = "timeout"


@dataclass(frozen=True)
class EpisodeConfig:
    dt_policy: float = 0.1
    max_episode_time: float = 20.0
    goal_radius: float = 0.5
    goal_sample_radius: float = 10.0

    def __post_init__(self):
        if min(self.dt_policy, self.max_episode_time, self.goal_radius, self.goal_sample_radius) <= 0:
            raise ValueError("episode settings must be positive")

    @property
    def max_steps(self) -> int:
        return int(round(self.max_episode_time / self.dt_policy))


@dataclass
class Trajectory:
    states: list
    observations: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    scans: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    outcome: str = TIMEOUT
    dt: float = 0.1

    @property
    def n_steps(self) -> int:
        return len(self.actions)

    @property
    def elapsed(self) -> float:
        return self.n_steps * self.dt


class ZeroPolicy:
    """Always commands the zero action (clamped into the action box)."""

    kind = "zero"

    def __init__(self, robot_kind: str):
        self.robot_kind = robot_kind

    def act(self, obs):
        return clamp_action((0.0, 0.0), self.robot_kind)


class RandomPolicy:
    kind = "random"

    def __init__(self, robot_kind: str, rng: np.random.Generator):
        self.robot_kind = robot_kind
        self.rng = rng
        spec = ROBOTS[robot_kind]
        self.low = np.array(spec.action_low)
        self.high = np.array(spec.action_high)

    def act(self, obs):
        return clamp_action(self.rng.uniform(self.low, self.high), self.robot_kind)


def pose_of(state) -> tuple:
    return state.x, state.y, state.theta


def rollout(policy, grid: OccupancyGrid, start, goal: GoalSpec, cfg: EpisodeConfig,
            rng: np.random.Generator, lidar: LidarConfig = LidarConfig(),
            params: DynamicsParams = DEFAULT_PARAMS, weights=None, stack: FrameStack | None = None) -> Trajectory:
    """Run ``policy`` from ``start`` until the goal, a collision, or the time limit."""
    kind = robot_kind_of(start)
    radius = ROBOTS[kind].radius
    if not point_free(grid, (start.x, start.y), radius):
        raise ValueError(f"start state {start} is in collision")
    traj = Trajectory(states=[start], dt=cfg.dt_policy)
    if goal.reached(start.x, start.y):
        traj.outcome = REACHED
        return traj
    stack = stack.copy() if stack is not None else FrameStack()
    state = start
    for step in range(1, cfg.max_steps + 1):
        scan = lidar_scan(grid, pose_of(state), lidar, rng)
        stack.push(scan)
        obs = make_observation(state, goal, stack)
        action = clamp_action(policy.act(obs), kind)
        state = propagate(state, action, cfg.dt_policy, params)
        collided = not point_free(grid, (state.x, state.y), radius)
        traj.observations.append(obs)
        traj.actions.append(action)
        traj.scans.append(scan)
        traj.states.append(state)
        if weights is not None:
            traj.rewards.append(compute_reward(traj.states[:-1], state, action, scan, goal, weights, collided))
        if collided:
            traj.outcome = COLLIDED
            break
        if goal.reached(state.x, state.y):
            traj.outcome = REACHED
            break
    else:
        traj.outcome = TIMEOUT
    return traj


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """One row per recorded state: t, state fields, action applied from it, reward."""
    state_fields = list(traj.states[0]._fields)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + state_fields + ["a0", "a1", "reward"])
        for k, s in enumerate(traj.states):
            a = traj.actions[k] if k < len(traj.actions) else ("", "")
            r = traj.rewards[k] if k < len(traj.rewards) else ""
            w.writerow([repr(round(k * traj.dt, 10))] + [repr(float(v)) for v in s] + list(a) + [r])


def success_rate(policy, grid, pairs, cfg: EpisodeConfig, rng, lidar=LidarConfig()) -> float:
    """Fraction of (start, goal) pairs the policy reaches."""
    if not pairs:
        return math.nan
    hits = sum(rollout(policy, grid, s, g, cfg, rng, lidar).outcome == REACHED for s, g in pairs)
    return hits / len(pairs)
