"""Policy / estimator inputs: three stacked scans, body-frame goal, velocity, orientation.

Layout of an observation vector (length ``3 * n_beams + 5``)::

    [scan(t-2), scan(t-1), scan(t), goal_dx, goal_dy, vel_0, vel_1, theta]
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dynamics import ROBOTS, robot_kind_of

N_FRAMES = 3


def observation_size(n_beams: int) -> int:
    return N_FRAMES * n_beams + 5


class FrameStack:
    """The last three scans; missing frames repeat the earliest available scan."""

    def __init__(self, scans=()):
        self._frames = deque(maxlen=N_FRAMES)
        for s in scans:
            self.push(s)

    def push(self, scan) -> None:
        self._frames.append(np.asarray(scan, dtype=np.float64))

    def __len__(self) -> int:
        return len(self._frames)

    def copy(self) -> "FrameStack":
        return FrameStack(self._frames)

    def frames(self) -> tuple:
        if not self._frames:
            raise ValueError("frame stack is empty")
        padded = [self._frames[0]] * (N_FRAMES - len(self._frames)) + list(self._frames)
        return tuple(padded)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.frames())

    @property
    def latest(self) -> np.ndarray:
        if not self._frames:
            raise ValueError("frame stack is empty")
        return self._frames[-1]


def body_frame(state, xy) -> tuple[float, float]:
    dx = xy[0] - state.x
    dy = xy[1] - state.y
    c, s = math.cos(state.theta), math.sin(state.theta)
    return c * dx + s * dy, -s * dx + c * dy


def make_observation(state, goal, stack: FrameStack) -> np.ndarray:
    """Observation toward ``goal`` (a GoalSpec or an ``(x, y)`` pair)."""
    xy = getattr(goal, "position", goal)
    lidar = stack.flat()
    gx, gy = body_frame(state, xy)
    v0, v1 = ROBOTS[robot_kind_of(state)].body_velocity(state)
    return np.concatenate([lidar, (gx, gy, v0, v1, state.theta)])


def make_observations(state, targets_xy: np.ndarray, stack: FrameStack) -> np.ndarray:
    """One observation row per target position, sharing the state's scans."""
    targets_xy = np.atleast_2d(np.asarray(targets_xy, dtype=np.float64))
    n = targets_xy.shape[0]
    lidar = stack.flat()
    out = np.empty((n, lidar.shape[0] + 5))
    out[:, :lidar.shape[0]] = lidar
    c, s = math.cos(state.theta), math.sin(state.theta)
    dx = targets_xy[:, 0] - state.x
    dy = targets_xy[:, 1] - state.y
    out[:, -5] = c * dx + s * dy
    out[:, -4] = -s * dx + c * dy
    v0, v1 = ROBOTS[robot_kind_of(state)].body_velocity(state)
    out[:, -3] = v0
    out[:, -2] = v1
    out[:, -1] = state.theta
    return out


def split_observation(obs: np.ndarray, n_beams: int) -> dict:
    obs = np.asarray(obs)
    k = N_FRAMES * n_beams
    return {
        "scans": obs[..., :k].reshape(obs.shape[:-1] + (N_FRAMES, n_beams)),
        "rel_goal": obs[..., k:k + 2],
        "velocity": obs[..., k + 2:k + 4],
        "orientation": obs[..., k + 4],
    }


@dataclass(frozen=True)
class ObservationScaling:
    n_beams: int = 64
    max_range: float = 8.0
    position_scale: float = 10.0
    velocity_scale: float = 1.0
    angle_scale: float = math.pi

    def divisor(self) -> np.ndarray:
        return np.concatenate([
            np.full(N_FRAMES * self.n_beams, self.max_range),
            [self.position_scale, self.position_scale, self.velocity_scale, self.velocity_scale, self.angle_scale],
        ])

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def normalize_observation(obs: np.ndarray, cfg: ObservationScaling) -> np.ndarray:
    return np.asarray(obs, dtype=np.float64) / cfg.divisor()


def denormalize_observation(z: np.ndarray, cfg: ObservationScaling) -> np.ndarray:
    return np.asarray(z, dtype=np.float64) * cfg.divisor()
