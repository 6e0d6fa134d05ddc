import math

import pytest
from hypothesis import given, strategies as st

from platoonsim.mobility import (
    LeaderProfile,
    PathGeometry,
    VehicleSpec,
    VehicleState,
    gap_front,
    leader_target_speed,
    path_position,
    step_vehicle,
)

SQUARE = PathGeometry([(0, 0), (100, 0), (100, 100), (0, 100), (0, 0)])


def test_path_position_at_waypoints_and_midpoints():
    assert SQUARE.total_length == 400.0
    assert path_position(SQUARE, 0.0) == (0.0, 0.0)
    assert path_position(SQUARE, 50.0) == (50.0, 0.0)
    assert path_position(SQUARE, 150.0) == (100.0, 50.0)


def test_path_position_wraps_modulo_length():
    assert path_position(SQUARE, 410.0) == path_position(SQUARE, 10.0)
    assert path_position(SQUARE, -10.0) == path_position(SQUARE, 390.0)


def test_leader_profile_square_wave():
    prof = LeaderProfile()
    assert leader_target_speed(0.0, prof) == 25.0
    assert leader_target_speed(9.99, prof) == 25.0
    assert leader_target_speed(10.0, prof) == 15.0
    assert leader_target_speed(25.0, prof) == 25.0
    assert prof.v_mean == 20.0


def test_step_constant_speed_advances_exactly():
    spec = VehicleSpec(id="v")
    st0 = VehicleState(id="v", s=0.0, speed=20.0)
    st1 = step_vehicle(st0, spec, 0.0, 0.01, 400.0)
    assert st1.s == pytest.approx(0.2, abs=0)
    assert st1.speed == 20.0
    assert st1.accel == 0.0


def test_step_actuation_lag_first_order():
    # one step toward a 1 m/s^2 command with tau = 0.5: accel' = 0.02
    spec = VehicleSpec(id="v", tau=0.5)
    st0 = VehicleState(id="v", s=0.0, speed=10.0)
    st1 = step_vehicle(st0, spec, 1.0, 0.01, 400.0)
    assert st1.accel == pytest.approx(0.02, rel=1e-12)


def test_step_never_reverses():
    spec = VehicleSpec(id="v")
    st0 = VehicleState(id="v", s=5.0, speed=0.0, accel=0.0)
    st1 = step_vehicle(st0, spec, -6.0, 0.01, 400.0)
    assert st1.speed == 0.0
    assert st1.s == 5.0


def test_step_clamps_command_to_vehicle_limits():
    spec = VehicleSpec(id="v", max_accel=2.5, max_decel=6.0)
    st0 = VehicleState(id="v", s=0.0, speed=10.0)
    up = step_vehicle(st0, spec, 100.0, 0.01, 400.0)
    down = step_vehicle(st0, spec, -100.0, 0.01, 400.0)
    assert up.accel_cmd == 2.5
    assert down.accel_cmd == -6.0


def test_accel_converges_exponentially_to_command():
    # after k steps of constant command, the gap to the command shrinks by
    # (1 - dt/tau)^k; check against the closed form within 1%
    spec = VehicleSpec(id="v", tau=0.5)
    state = VehicleState(id="v", s=0.0, speed=10.0)
    dt, cmd, k = 0.01, 2.0, 200
    for _ in range(k):
        state = step_vehicle(state, spec, cmd, dt, 1e9)
    expected_gap = abs(0.0 - cmd) * (1.0 - dt / spec.tau) ** k
    assert abs(cmd - state.accel) == pytest.approx(expected_gap, rel=0.01)


def test_zero_command_keeps_speed_to_machine_precision():
    spec = VehicleSpec(id="v")
    state = VehicleState(id="v", s=0.0, speed=17.25)
    for _ in range(1000):
        state = step_vehicle(state, spec, 0.0, 0.01, 400.0)
    assert state.speed == 17.25
    assert state.accel == 0.0


@given(
    speed=st.floats(0.0, 40.0),
    accel=st.floats(-6.0, 2.5),
    cmd=st.floats(-20.0, 20.0),
)
def test_position_continuity_property(speed, accel, cmd):
    spec = VehicleSpec(id="v")
    st0 = VehicleState(id="v", s=100.0, speed=speed, accel=accel)
    dt = 0.01
    st1 = step_vehicle(st0, spec, cmd, dt, 400.0)
    v_max = speed + max(spec.max_accel, spec.max_decel) * dt
    moved = (st1.s - st0.s) % 400.0
    assert moved <= v_max * dt + 1e-9
    assert st1.speed >= 0.0
    assert 0.0 <= st1.s < 400.0


def test_gap_front_basic_and_equilibrium():
    assert gap_front(100.0, 109.0, 400.0, 4.0) == pytest.approx(5.0)
    # equilibrium platoon spaced 9 m apart -> every pair reports 5 m
    ss = [80.0, 71.0, 62.0]
    for follower, front in zip(ss[1:], ss[:-1]):
        assert gap_front(follower, front, 400.0, 4.0) == pytest.approx(5.0)


def test_gap_front_wraps_across_loop_origin():
    assert gap_front(396.0, 2.0, 400.0, 4.0) == pytest.approx(2.0)


def test_path_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        PathGeometry([(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        PathGeometry([(0, 0), (0, 0), (0, 0)])
