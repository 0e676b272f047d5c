"""Robot models: differential drive, kinematic car with inertia, and Asteroid.

States are immutable named tuples; actions are plain ``(a0, a1)`` float tuples
clamped to the robot's action box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

DIFF_DRIVE = "diff_drive"
CAR = "car"
ASTEROID = "asteroid"

ROBOT_RADIUS = 0.3
MAX_SPEED = 1.0
CAR_MAX_STEER = math.pi / 6.0
CAR_MAX_STEER_RATE = 1.0

Action = tuple


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.pi - ((math.pi - theta) % (2.0 * math.pi))


def _clip(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


class DiffDriveState(NamedTuple):
    x: float
    y: float
    theta: float
    v: float = 0.0
    omega: float = 0.0

    kind = DIFF_DRIVE


class CarState(NamedTuple):
    x: float
    y: float
    theta: float
    v: float = 0.0
    steer: float = 0.0

    kind = CAR


class AsteroidState(NamedTuple):
    x: float
    y: float
    xdot: float = 0.0
    ydot: float = 0.0
    theta: float = 0.0

    kind = ASTEROID


@dataclass(frozen=True)
class DynamicsParams:
    kappa: float = 1.0
    wheelbase: float = 0.8
    dt_integrate: float = 0.01

    def __post_init__(self):
        if not (self.kappa > 0 and self.wheelbase > 0 and self.dt_integrate > 0):
            raise ValueError("kappa, wheelbase and dt_integrate must be positive")


DEFAULT_PARAMS = DynamicsParams()


@dataclass(frozen=True)
class RobotSpec:
    kind: str
    state_cls: type
    action_low: tuple
    action_high: tuple
    t_horizon: float
    radius: float = ROBOT_RADIUS

    def state_at(self, x: float, y: float, theta: float):
        if self.kind == ASTEROID:
            return AsteroidState(x, y, 0.0, 0.0, wrap_angle(theta))
        return self.state_cls(x, y, wrap_angle(theta), 0.0, 0.0)

    def random_state(self, x: float, y: float, rng: np.random.Generator):
        theta = rng.uniform(-math.pi, math.pi)
        if self.kind == DIFF_DRIVE:
            return DiffDriveState(x, y, theta, rng.uniform(-MAX_SPEED, MAX_SPEED), rng.uniform(-2.0, 2.0))
        if self.kind == CAR:
            return CarState(x, y, theta, rng.uniform(0.0, MAX_SPEED), rng.uniform(-CAR_MAX_STEER, CAR_MAX_STEER))
        speed = MAX_SPEED * math.sqrt(rng.uniform())
        heading = rng.uniform(-math.pi, math.pi)
        return AsteroidState(x, y, speed * math.cos(heading), speed * math.sin(heading), theta)

    def body_velocity(self, state) -> tuple[float, float]:
        """The two velocity scalars exposed to observations."""
        if self.kind == ASTEROID:
            c, s = math.cos(state.theta), math.sin(state.theta)
            return c * state.xdot + s * state.ydot, -s * state.xdot + c * state.ydot
        return state[3], state[4]

    def speed(self, state) -> float:
        if self.kind == ASTEROID:
            return math.hypot(state.xdot, state.ydot)
        return abs(state.v)


ROBOTS = {
    DIFF_DRIVE: RobotSpec(DIFF_DRIVE, DiffDriveState, (-MAX_SPEED, -2.0), (MAX_SPEED, 2.0), 20.0),
    CAR: RobotSpec(CAR, CarState, (-1.0, -CAR_MAX_STEER_RATE), (1.0, CAR_MAX_STEER_RATE), 40.0),
    ASTEROID: RobotSpec(ASTEROID, AsteroidState, (-0.5, -0.5), (1.0, 0.5), 20.0),
}


def robot_kind_of(state) -> str:
    try:
        return state.kind
    except AttributeError:
        raise TypeError(f"not a robot state: {state!r}") from None


def clamp_action(raw, robot_kind: str) -> Action:
    spec = ROBOTS[robot_kind]
    return (
        _clip(float(raw[0]), spec.action_low[0], spec.action_high[0]),
        _clip(float(raw[1]), spec.action_low[1], spec.action_high[1]),
    )


def _step_diff_drive(s, a, n, p):
    x, y, th = s.x, s.y, s.theta
    v, w = a
    dt = p.dt_integrate
    for _ in range(n):
        th = wrap_angle(th + w * dt)
        x += v * math.cos(th) * dt
        y += v * math.sin(th) * dt
    return DiffDriveState(x, y, th, v, w)


def _step_car(s, a, n, p):
    x, y, th, v, steer = s
    acc, steer_rate = a
    dt = p.dt_integrate
    inv_l = 1.0 / p.wheelbase
    for _ in range(n):
        v = _clip(v + acc * dt, 0.0, MAX_SPEED)
        steer = _clip(steer + steer_rate * dt, -CAR_MAX_STEER, CAR_MAX_STEER)
        th = wrap_angle(th + v * inv_l * math.tan(steer) * dt)
        x += v * math.cos(th) * dt
        y += v * math.sin(th) * dt
    return CarState(x, y, th, v, steer)


def _step_asteroid(s, a, n, p):
    x, y, xd, yd, th = s
    thrust, turn = a
    dt = p.dt_integrate
    # linear drag integrated exactly over each step with thrust held constant
    decay = math.exp(-p.kappa * dt)
    gain = (1.0 - decay) / p.kappa
    for _ in range(n):
        xd = xd * decay + thrust * math.cos(th) * gain
        yd = yd * decay + thrust * math.sin(th) * gain
        speed = math.hypot(xd, yd)
        if speed > MAX_SPEED:
            xd *= MAX_SPEED / speed
            yd *= MAX_SPEED / speed
        x += xd * dt
        y += yd * dt
        th = wrap_angle(th + turn * dt)
    return AsteroidState(x, y, xd, yd, th)


_STEPPERS: dict[str, Callable] = {
    DIFF_DRIVE: _step_diff_drive,
    CAR: _step_car,
    ASTEROID: _step_asteroid,
}


def n_substeps(duration: float, params: DynamicsParams = DEFAULT_PARAMS) -> int:
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    n = int(round(duration / params.dt_integrate))
    if n < 1 or abs(n * params.dt_integrate - duration) > 1e-9:
        raise ValueError(f"duration {duration} is not a multiple of dt_integrate={params.dt_integrate}")
    return n


def propagate(state, action, duration: float, params: DynamicsParams = DEFAULT_PARAMS):
    """Advance ``state`` under a constant (clamped) ``action`` for ``duration`` seconds."""
    kind = robot_kind_of(state)
    n = n_substeps(duration, params)
    return _STEPPERS[kind](state, clamp_action(action, kind), n, params)


def state_distance_euclidean(a, b) -> float:
    """Planar distance between two states of the same robot kind."""
    if robot_kind_of(a) != robot_kind_of(b):
        raise ValueError(f"robot kind mismatch: {a.kind} vs {b.kind}")
    return math.hypot(a.x - b.x, a.y - b.y)


def state_from_list(kind: str, values) -> tuple:
    return ROBOTS[kind].state_cls(*(float(v) for v in values))
