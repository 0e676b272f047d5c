"""Dynamic-window style local planners scored from the robot's own scan.

All scoring happens in the robot body frame, so the same code serves the
world-frame :func:`dwa_act` and observation-driven policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from ..dynamics import DIFF_DRIVE, MAX_SPEED, ROBOT_RADIUS, ROBOTS, clamp_action, propagate, robot_kind_of
from ..observation import body_frame, split_observation
from ..world import LidarConfig


@dataclass(frozen=True)
class DwaConfig:
    n_v: int = 6
    n_omega: int = 15
    horizon: float = 2.0
    sample_dt: float = 0.2
    heading_time: float = 0.6
    goal_pass_radius: float = 0.4
    heading_weight: float = 1.0
    velocity_weight: float = 0.3
    clearance_weight: float = 0.4
    clearance_cap: float = 1.0
    safety_margin: float = 0.12
    robot_radius: float = ROBOT_RADIUS
    max_speed: float = MAX_SPEED
    max_omega: float = 2.0


DEFAULT_DWA = DwaConfig()


def scan_points(scan, lidar: LidarConfig) -> np.ndarray:
    """Body-frame obstacle points for beams that returned before max range."""
    scan = np.asarray(scan, dtype=np.float64)
    hit = scan < lidar.max_range - 1e-6
    ang = lidar.beam_offsets[hit]
    r = scan[hit]
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)


def _arc_points(v, w, times):
    """Body-frame positions and headings of constant (v, w) arcs at ``times``."""
    v = v[:, None]
    w = w[:, None]
    t = times[None, :]
    th = w * t
    small = np.abs(w) < 1e-9
    w_safe = np.where(small, 1.0, w)
    x = np.where(small, v * t, v / w_safe * np.sin(th))
    y = np.where(small, 0.0, v / w_safe * (1.0 - np.cos(th)))
    return np.stack([x, y], axis=-1), th


def _sample_times(cfg: DwaConfig) -> np.ndarray:
    return np.arange(1, int(round(cfg.horizon / cfg.sample_dt)) + 1) * cfg.sample_dt


def _heading_index(cfg: DwaConfig) -> int:
    return max(int(round(cfg.heading_time / cfg.sample_dt)) - 1, 0)


@njit(cache=True)
def _min_distance(points, obstacles):
    n, t = points.shape[0], points.shape[1]
    out = np.empty(n)
    for i in range(n):
        best = np.inf
        for k in range(t):
            px, py = points[i, k, 0], points[i, k, 1]
            for j in range(obstacles.shape[0]):
                dx = px - obstacles[j, 0]
                dy = py - obstacles[j, 1]
                d = dx * dx + dy * dy
                if d < best:
                    best = d
        out[i] = math.sqrt(best)
    return out


def score_trajectories(points, thetas, speeds, obstacles, rel_goal, cfg: DwaConfig, enable_clearance: bool):
    """Score body-frame candidate trajectories sampled every ``cfg.sample_dt``.

    Heading to the goal is judged ``cfg.heading_time`` into each trajectory
    (or is perfect if the trajectory passes the goal); clearance covers the
    whole horizon. Returns a dict of per-candidate arrays: ``heading``,
    ``velocity``, ``clearance``, ``admissible`` and ``total``. With
    ``enable_clearance`` false the obstacle terms are neither computed nor used.
    """
    n = points.shape[0]
    gx, gy = rel_goal
    k = min(_heading_index(cfg), points.shape[1] - 1)
    look = points[:, k, :]
    bearing = np.arctan2(gy - look[:, 1], gx - look[:, 0])
    err = np.abs((bearing - thetas[:, k] + np.pi) % (2.0 * np.pi) - np.pi)
    heading = 1.0 - err / np.pi
    goal_d = np.hypot(points[..., 0] - gx, points[..., 1] - gy).min(axis=1)
    heading = np.where(goal_d < cfg.goal_pass_radius, 1.0, heading)
    velocity = np.asarray(speeds, dtype=np.float64) / cfg.max_speed
    total = cfg.heading_weight * heading + cfg.velocity_weight * velocity
    out = {"heading": heading, "velocity": velocity}
    if enable_clearance:
        if obstacles.shape[0]:
            reach = np.abs(points).max() + cfg.robot_radius + cfg.safety_margin + cfg.clearance_cap
            near = obstacles[np.abs(obstacles).max(axis=1) <= reach]
        else:
            near = obstacles
        if near.shape[0]:
            dist = _min_distance(np.ascontiguousarray(points), np.ascontiguousarray(near))
        else:
            dist = np.full(n, np.inf)
        free = dist - cfg.robot_radius
        clearance = np.minimum(free, cfg.clearance_cap) / cfg.clearance_cap
        admissible = free > cfg.safety_margin
        total = total + cfg.clearance_weight * clearance
        total = np.where(admissible, total, -np.inf)
        out["clearance"] = clearance
        out["admissible"] = admissible
    else:
        out["clearance"] = np.zeros(n)
        out["admissible"] = np.ones(n, dtype=bool)
    out["total"] = total
    return out


def dwa_candidates(cfg: DwaConfig):
    v = np.linspace(0.0, cfg.max_speed, cfg.n_v)
    w = np.linspace(-cfg.max_omega, cfg.max_omega, cfg.n_omega)
    vv, ww = np.meshgrid(v, w, indexing="ij")
    return vv.ravel(), ww.ravel()


@lru_cache(maxsize=16)
def _candidate_arcs(cfg: DwaConfig):
    v, w = dwa_candidates(cfg)
    points, thetas = _arc_points(v, w, _sample_times(cfg))
    for a in (v, w, points, thetas):
        a.setflags(write=False)
    return v, w, points, thetas


def dwa_scores(scan, rel_goal, lidar: LidarConfig, cfg: DwaConfig = DEFAULT_DWA, enable_clearance: bool = True):
    v, w, points, thetas = _candidate_arcs(cfg)
    obstacles = scan_points(scan, lidar) if enable_clearance else np.zeros((0, 2))
    out = score_trajectories(points, thetas, v, obstacles, rel_goal, cfg, enable_clearance)
    out["v"] = v
    out["omega"] = w
    out["points"] = points
    return out


def _choose(scores) -> tuple:
    total = scores["total"]
    if not np.any(np.isfinite(total)):
        return (0.0, 0.0)
    k = int(np.argmax(total))
    return (float(scores["v"][k]), float(scores["omega"][k]))


def dwa_body_act(scan, rel_goal, lidar: LidarConfig, cfg: DwaConfig = DEFAULT_DWA, enable_clearance: bool = True):
    return clamp_action(_choose(dwa_scores(scan, rel_goal, lidar, cfg, enable_clearance)), DIFF_DRIVE)


def dwa_act(state, goal, scan, enable_clearance: bool = True, lidar: LidarConfig = LidarConfig(),
            cfg: DwaConfig = DEFAULT_DWA):
    """Best sampled (v, omega) for a differential-drive robot; (0, 0) when every window collides."""
    if robot_kind_of(state) != DIFF_DRIVE:
        raise ValueError(f"DWA supports the differential-drive robot only, got {state.kind}")
    rel = body_frame(state, getattr(goal, "position", goal))
    return dwa_body_act(scan, rel, lidar, cfg, enable_clearance)


class DwaPolicy:
    """Observation-driven DWA local planner for the differential-drive robot."""

    robot_kind = DIFF_DRIVE

    def __init__(self, lidar: LidarConfig = LidarConfig(), cfg: DwaConfig = DEFAULT_DWA, enable_clearance: bool = True):
        self.lidar = lidar
        self.cfg = cfg
        self.enable_clearance = enable_clearance
        self.kind = "dwa" if enable_clearance else "dwa_no_clearance"

    def act(self, obs):
        parts = split_observation(obs, self.lidar.n_beams)
        return dwa_body_act(parts["scans"][-1], parts["rel_goal"], self.lidar, self.cfg, self.enable_clearance)


class SampledHorizonPolicy:
    """DWA-like scripted planner for any robot kind.

    Candidate constant actions are rolled through the true dynamics from a
    body-frame copy of the current velocity and scored like DWA.
    """

    kind = "scripted"

    def __init__(self, robot_kind: str, lidar: LidarConfig = LidarConfig(), cfg: DwaConfig = DEFAULT_DWA,
                 n_a0: int = 5, n_a1: int = 9):
        self.robot_kind = robot_kind
        self.lidar = lidar
        self.cfg = cfg
        spec = ROBOTS[robot_kind]
        a0 = np.linspace(spec.action_low[0], spec.action_high[0], n_a0)
        a1 = np.linspace(spec.action_low[1], spec.action_high[1], n_a1)
        self.actions = [(float(x), float(y)) for x in a0 for y in a1]
        self.n_samples = int(round(cfg.horizon / cfg.sample_dt))

    def _body_state(self, v0, v1):
        spec = ROBOTS[self.robot_kind]
        if self.robot_kind == "asteroid":
            return spec.state_cls(0.0, 0.0, v0, v1, 0.0)
        return spec.state_cls(0.0, 0.0, 0.0, v0, v1)

    def act(self, obs):
        parts = split_observation(obs, self.lidar.n_beams)
        v0, v1 = parts["velocity"]
        start = self._body_state(float(v0), float(v1))
        n_a = len(self.actions)
        points = np.empty((n_a, self.n_samples, 2))
        thetas = np.empty((n_a, self.n_samples))
        speeds = np.empty(n_a)
        for k, a in enumerate(self.actions):
            s = start
            for j in range(self.n_samples):
                s = propagate(s, a, self.cfg.sample_dt)
                points[k, j] = (s.x, s.y)
                thetas[k, j] = s.theta
            speeds[k] = math.hypot(s.x, s.y) / self.cfg.horizon
        obstacles = scan_points(parts["scans"][-1], self.lidar)
        scores = score_trajectories(points, thetas, speeds, obstacles, parts["rel_goal"], self.cfg, True)
        total = scores["total"]
        if not np.any(np.isfinite(total)):
            return clamp_action((0.0, 0.0), self.robot_kind)
        return self.actions[int(np.argmax(total))]
