"""Policy and estimator diagnostics: P2P success by distance, TTR fields, critic comparison."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import ROBOTS
from ..estimator import ReachabilityEstimator
from ..observation import FrameStack, make_observation
from ..policy.rollout import REACHED, EpisodeConfig, pose_of, rollout
from ..world import GoalSpec, LidarConfig, OccupancyGrid, lidar_scan, point_free, sample_free_position


@dataclass
class DistanceBin:
    low: float
    high: float
    trials: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else math.nan


def _goal_at_distance(grid, start, lo, hi, radius, rng, max_tries=500):
    for _ in range(max_tries):
        d = rng.uniform(lo, hi)
        a = rng.uniform(-math.pi, math.pi)
        g = (start.x + d * math.cos(a), start.y + d * math.sin(a))
        if grid.in_bounds(*g) and point_free(grid, g, radius):
            return g
    return None


def p2p_success_by_distance(policy, grid: OccupancyGrid, bins, trials: int, rng: np.random.Generator,
                            cfg: EpisodeConfig | None = None, lidar: LidarConfig = LidarConfig()) -> list[DistanceBin]:
    """Rollout success for random start/goal pairs whose straight-line distance falls in each bin.

    ``bins`` are ascending edges; bin ``k`` covers ``[bins[k], bins[k+1])``.
    """
    kind = policy.robot_kind
    spec = ROBOTS[kind]
    cfg = cfg or EpisodeConfig(max_episode_time=spec.t_horizon)
    out = []
    for lo, hi in zip(bins[:-1], bins[1:]):
        done = hits = 0
        attempts = 0
        while done < trials and attempts < 50 * trials:
            attempts += 1
            sx, sy = sample_free_position(grid, spec.radius, rng)
            start = spec.state_at(sx, sy, rng.uniform(-math.pi, math.pi))
            g = _goal_at_distance(grid, start, lo, hi, spec.radius, rng)
            if g is None:
                continue
            traj = rollout(policy, grid, start, GoalSpec(g, cfg.goal_radius), cfg, rng, lidar)
            done += 1
            hits += traj.outcome == REACHED
        out.append(DistanceBin(float(lo), float(hi), done, hits))
    return out


def write_bins_csv(bins, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["low", "high", "trials", "successes", "rate"])
        for b in bins:
            w.writerow([b.low, b.high, b.trials, b.successes, repr(round(b.rate, 6))])


# ---------------------------------------------------------------- TTR field


@dataclass
class TTRField:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    threshold: float
    goal: tuple

    @property
    def unreachable(self) -> np.ndarray:
        return np.isfinite(self.values) & (self.values > self.threshold)

    @property
    def free(self) -> np.ndarray:
        return np.isfinite(self.values)

    def value_at(self, x: float, y: float) -> float:
        i = int(np.argmin(np.abs(self.xs - x)))
        j = int(np.argmin(np.abs(self.ys - y)))
        return float(self.values[j, i])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "ttr", "unreachable"])
            for j, y in enumerate(self.ys):
                for i, x in enumerate(self.xs):
                    v = self.values[j, i]
                    if np.isfinite(v):
                        w.writerow([repr(round(float(x), 6)), repr(round(float(y), 6)), repr(round(float(v), 6)),
                                    int(v > self.threshold)])


def ttr_contour(source, grid: OccupancyGrid, goal, grid_step: float, robot_kind: str | None = None,
                theta: float = 0.0, lidar: LidarConfig | None = None) -> TTRField:
    """TTR to ``goal`` from a zero-velocity state at every free lattice point.

    ``source`` is a ReachabilityEstimator (fed a noise-free scan) or an object
    with ``ttr(state, goal_xy)``, such as the rollout oracle. Occupied
    points are NaN.
    """
    goal = getattr(goal, "position", goal)
    if isinstance(source, ReachabilityEstimator):
        kind = robot_kind or source.robot_kind
        threshold = source.ttr_threshold
        lidar = lidar or LidarConfig(source.scaling.n_beams, source.scaling.max_range, 0.0)
    else:
        kind = robot_kind or source.policy.robot_kind
        threshold = source.cfg.t_horizon
    spec = ROBOTS[kind]
    if not point_free(grid, goal, spec.radius):
        raise ValueError(f"goal {goal} is in collision")
    w, h = grid.extent
    xs = np.arange(grid_step / 2, w, grid_step)
    ys = np.arange(grid_step / 2, h, grid_step)
    values = np.full((ys.size, xs.size), np.nan)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            if not point_free(grid, (x, y), spec.radius):
                continue
            state = spec.state_at(float(x), float(y), theta)
            if isinstance(source, ReachabilityEstimator):
                stack = FrameStack([lidar_scan(grid, pose_of(state), lidar)])
                values[j, i] = source.predict(make_observation(state, goal, stack)[None, :])[0]
            else:
                values[j, i] = source.ttr(state, goal)
    return TTRField(xs, ys, values, float(threshold), tuple(goal))


# ---------------------------------------------------------------- critic vs TTR


@dataclass
class CriticSeries:
    ttr: np.ndarray
    neg_value: np.ndarray
    outcome: str


def critic_vs_ttr_report(policy, estimator: ReachabilityEstimator, trajectories) -> list[CriticSeries]:
    """Per trajectory step, the predicted TTR and the negated critic value."""
    if not callable(getattr(policy, "value", None)):
        raise TypeError(f"{type(policy).__name__} has no critic")
    out = []
    for traj in trajectories:
        obs = np.asarray(traj.observations)
        if obs.size == 0:
            out.append(CriticSeries(np.zeros(0), np.zeros(0), traj.outcome))
            continue
        out.append(CriticSeries(estimator.predict(obs), -np.asarray(policy.value(obs)), traj.outcome))
    return out


def decreasing_fraction(series) -> float:
    d = np.diff(np.asarray(series))
    return float(np.mean(d < 0)) if d.size else math.nan
