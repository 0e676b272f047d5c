"""Per-robot reward features and the linear reward ``theta . features``."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import ASTEROID, CAR, DIFF_DRIVE, ROBOTS

FEATURES = {
    ASTEROID: ("goal", "goal_dist", "collision", "clearance", "speed", "step", "disp"),
    DIFF_DRIVE: ("goal", "goal_dist", "collision", "clearance", "step", "turning"),
    CAR: ("goal", "goal_prog", "collision", "step", "backward"),
}

# Hand-set stand-ins for evolved weights.
DEFAULT_WEIGHTS = {
    ASTEROID: np.array([10.0, 0.02, 5.0, 0.01, -0.1, -0.01, 0.05]),
    DIFF_DRIVE: np.array([10.0, 0.2, 5.0, 0.02, -0.1, 0.05]),
    CAR: np.array([10.0, 1.0, 5.0, -0.01, 0.1]),
}

SPEED_CLEARANCE = 0.25


def one_hot(robot_kind: str, feature: str) -> np.ndarray:
    names = FEATURES[robot_kind]
    w = np.zeros(len(names))
    w[names.index(feature)] = 1.0
    return w


def reward_features(prev_states, state, action, scan, goal, collided: bool = False) -> np.ndarray:
    """Feature vector for one transition.

    ``prev_states`` lists earlier states, most recent last (``prev_states[-1]``
    is the state before ``state``). Terms needing missing history are 0.
    """
    kind = state.kind
    gx, gy = goal.position
    dist = math.hypot(gx - state.x, gy - state.y)
    reached = 1.0 if dist < goal.radius_dG else 0.0
    hit = -1.0 if collided else 0.0
    clearance = float(np.min(scan)) if scan is not None and len(scan) else 0.0
    if kind == CAR:
        if prev_states:
            p = prev_states[-1]
            prog = math.hypot(gx - p.x, gy - p.y) - dist
        else:
            prog = 0.0
        backward = -max(0.0, -state.v)
        return np.array([reached, prog, hit, 1.0, backward])
    if kind == DIFF_DRIVE:
        return np.array([reached, -dist, hit, clearance, 1.0, -abs(state.omega)])
    speed = ROBOTS[kind].speed(state)
    r_speed = speed if clearance < SPEED_CLEARANCE else 0.0
    disp = 0.0
    for lag in (3, 6, 9):
        if len(prev_states) >= lag:
            p = prev_states[-lag]
            disp += math.hypot(state.x - p.x, state.y - p.y)
    return np.array([reached, -dist, hit, clearance, r_speed, 1.0, disp])


def compute_reward(prev_states, state, action, scan, goal, weights, collided: bool = False) -> float:
    feats = reward_features(prev_states, state, action, scan, goal, collided)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != feats.shape or not np.all(np.isfinite(weights)):
        raise ValueError(f"{state.kind} needs {feats.shape[0]} finite weights, got {weights.shape}")
    return float(weights @ feats)
