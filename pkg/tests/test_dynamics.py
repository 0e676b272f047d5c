import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rlrrt.dynamics import (
    ASTEROID,
    CAR,
    CAR_MAX_STEER,
    DIFF_DRIVE,
    ROBOTS,
    AsteroidState,
    CarState,
    DiffDriveState,
    DynamicsParams,
    clamp_action,
    propagate,
    state_distance_euclidean,
    wrap_angle,
)

KINDS = (DIFF_DRIVE, CAR, ASTEROID)
finite = st.floats(-5, 5, allow_nan=False)


@st.composite
def states_and_actions(draw, kind=None):
    kind = kind or draw(st.sampled_from(KINDS))
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    s = ROBOTS[kind].random_state(draw(finite), draw(finite), rng)
    a = (draw(st.floats(-3, 3)), draw(st.floats(-3, 3)))
    return kind, s, a


def test_asteroid_drag_decay_closed_form():
    s = AsteroidState(0.0, 0.0, 1.0, 0.0, 0.0)
    for t in (0.5, 1.0, 2.0):
        assert propagate(s, (0.0, 0.0), t).xdot == pytest.approx(math.exp(-t), abs=1e-3)
    assert propagate(s, (0.0, 0.0), 1.0).xdot == pytest.approx(0.3679, abs=1e-3)


def test_asteroid_terminal_speed():
    s = propagate(AsteroidState(0.0, 0.0), (1.0, 0.0), 7.0)
    assert s.xdot == pytest.approx(1.0, rel=0.01)
    assert abs(s.ydot) < 1e-12


def test_diff_drive_straight_line():
    s = propagate(DiffDriveState(0.0, 0.0, 0.0), (1.0, 0.0), 1.0)
    assert (s.x, s.y, s.theta) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)


def test_diff_drive_turns_in_place():
    s = propagate(DiffDriveState(0.0, 0.0, 0.0), (0.0, 2.0), 0.5)
    assert s.theta == pytest.approx(1.0, abs=1e-12)
    assert (s.x, s.y) == (0.0, 0.0)


def test_diff_drive_arc_matches_closed_form():
    # semi-implicit Euler on a constant-curvature arc converges to the exact circle
    v, w, t = 1.0, 0.5, 2.0
    s = propagate(DiffDriveState(0.0, 0.0, 0.0), (v, w), t)
    assert s.x == pytest.approx(v / w * math.sin(w * t), abs=0.01)
    assert s.y == pytest.approx(v / w * (1 - math.cos(w * t)), abs=0.01)


def test_car_speed_and_steer_saturate():
    s = propagate(CarState(0.0, 0.0, 0.0, 0.0, 0.0), (1.0, 1.0), 3.0)
    assert s.v == 1.0
    assert s.steer == pytest.approx(CAR_MAX_STEER)
    s = propagate(s, (-1.0, 0.0), 2.0)
    assert s.v == 0.0


def test_car_turning_radius():
    # full lock at unit speed turns at v/L*tan(steer) rad/s
    s0 = CarState(0.0, 0.0, 0.0, 1.0, CAR_MAX_STEER)
    s = propagate(s0, (0.0, 0.0), 1.0)
    assert s.theta == pytest.approx(math.tan(CAR_MAX_STEER) / 0.8, abs=1e-9)


@pytest.mark.parametrize(
    "raw, kind, expected",
    [
        ((2.0, 0.0), ASTEROID, (1.0, 0.0)),
        ((-1.0, -1.0), ASTEROID, (-0.5, -0.5)),
        ((0.3, -0.2), ASTEROID, (0.3, -0.2)),
        ((5.0, -5.0), DIFF_DRIVE, (1.0, -2.0)),
        ((-2.0, 0.1), CAR, (-1.0, 0.1)),
    ],
)
def test_clamp_action(raw, kind, expected):
    assert clamp_action(raw, kind) == expected


@settings(max_examples=100)
@given(st.sampled_from(KINDS), st.floats(-10, 10), st.floats(-10, 10))
def test_clamp_idempotent(kind, a0, a1):
    a = clamp_action((a0, a1), kind)
    assert clamp_action(a, kind) == a
    lo, hi = ROBOTS[kind].action_low, ROBOTS[kind].action_high
    assert lo[0] <= a[0] <= hi[0] and lo[1] <= a[1] <= hi[1]


def test_distance_examples():
    a = DiffDriveState(0.0, 0.0, 0.0)
    assert state_distance_euclidean(a, a) == 0.0
    assert state_distance_euclidean(a, DiffDriveState(3.0, 4.0, 1.0, 0.5, 0.0)) == 5.0


def test_distance_kind_mismatch():
    with pytest.raises(ValueError):
        state_distance_euclidean(DiffDriveState(0, 0, 0), CarState(0, 0, 0))


@given(states_and_actions(), states_and_actions())
def test_distance_symmetric(p, q):
    a, b = p[1], q[1]
    if a.kind != b.kind:
        b = ROBOTS[a.kind].state_at(b.x, b.y, 0.0)
    assert state_distance_euclidean(a, b) == state_distance_euclidean(b, a)


@pytest.mark.parametrize("duration", [0.0, -1.0, 0.015])
def test_bad_durations(duration):
    with pytest.raises(ValueError):
        propagate(DiffDriveState(0, 0, 0), (1.0, 0.0), duration)


def test_params_invariants():
    with pytest.raises(ValueError):
        DynamicsParams(kappa=0.0)


@settings(max_examples=80, deadline=None)
@given(states_and_actions(), st.integers(1, 150), st.integers(1, 150))
def test_semigroup(sa, n1, n2):
    _, s, a = sa
    t1, t2 = n1 * 0.01, n2 * 0.01
    whole = propagate(s, a, round((n1 + n2) * 0.01, 10))
    split = propagate(propagate(s, a, t1), a, t2)
    assert whole == split


@settings(max_examples=80, deadline=None)
@given(states_and_actions(), st.integers(1, 300))
def test_propagate_is_pure(sa, n):
    _, s, a = sa
    assert propagate(s, a, n * 0.01) == propagate(s, a, n * 0.01)


@settings(max_examples=150, deadline=None)
@given(states_and_actions(), st.integers(1, 500))
def test_propagated_states_respect_caps(sa, n):
    kind, s, a = sa
    out = propagate(s, a, n * 0.01)
    assert -math.pi < out.theta <= math.pi
    if kind == DIFF_DRIVE:
        assert abs(out.v) <= 1.0 and abs(out.omega) <= 2.0
    elif kind == CAR:
        assert 0.0 <= out.v <= 1.0 and abs(out.steer) <= CAR_MAX_STEER
    else:
        assert math.hypot(out.xdot, out.ydot) <= 1.0 + 1e-12


@given(st.floats(-100, 100))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(theta), abs=1e-9)
