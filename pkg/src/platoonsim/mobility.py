"""Vehicle kinematics on a closed polyline path.

Vehicles live on a 1D arc coordinate wrapped modulo the loop length; the 2D
position is recovered by interpolating the path polyline. Longitudinal
dynamics use a first-order actuation lag followed by semi-implicit Euler
integration, the standard engine model in platooning simulators.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class VehicleSpec:
    id: str
    initial_s: float = 0.0
    initial_speed: float = 0.0
    length: float = 4.0
    max_accel: float = 2.5
    max_decel: float = 6.0  # magnitude
    tau: float = 0.5  # actuation time constant, s


@dataclass
class VehicleState:
    id: str
    s: float  # arc position, m, in [0, path_length)
    speed: float  # m/s, never negative
    accel: float = 0.0  # actuated
    accel_cmd: float = 0.0  # commanded
    mode: str = "CACC"  # mirrored from the control layer for logging


@dataclass(frozen=True)
class LeaderProfile:
    """Deterministic square-wave speed target for the platoon leader.

    The target alternates v_high for one period, then v_low for one, giving
    the documented 20 m/s mean for the 15/25 defaults.
    """

    v_low: float = 15.0
    v_high: float = 25.0
    period: float = 10.0

    @property
    def v_mean(self) -> float:
        return (self.v_low + self.v_high) / 2.0


class PathGeometry:
    """Closed polyline with precomputed cumulative arc lengths."""

    def __init__(self, waypoints: list[tuple[float, float]]):
        if len(waypoints) < 3:
            raise ValueError("path needs at least 3 waypoints")
        self.waypoints = [(float(x), float(y)) for x, y in waypoints]
        self.cum_lengths = [0.0]
        for (x0, y0), (x1, y1) in zip(self.waypoints, self.waypoints[1:]):
            self.cum_lengths.append(self.cum_lengths[-1] + math.hypot(x1 - x0, y1 - y0))
        self.total_length = self.cum_lengths[-1]
        if self.total_length <= 0.0:
            raise ValueError("path has zero length")

    def position(self, s: float) -> tuple[float, float]:
        """2D point at arc length s, wrapping modulo the loop length."""
        s = s % self.total_length
        i = bisect.bisect_right(self.cum_lengths, s) - 1
        i = min(i, len(self.waypoints) - 2)
        seg = self.cum_lengths[i + 1] - self.cum_lengths[i]
        t = (s - self.cum_lengths[i]) / seg if seg > 0 else 0.0
        (x0, y0), (x1, y1) = self.waypoints[i], self.waypoints[i + 1]
        return (x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)


def path_position(path: PathGeometry, s: float) -> tuple[float, float]:
    return path.position(s)


def leader_target_speed(t: float, profile: LeaderProfile) -> float:
    """v_high during even periods starting at t=0, v_low during odd ones."""
    k = int(t // profile.period)
    return profile.v_high if k % 2 == 0 else profile.v_low


def step_vehicle(
    state: VehicleState, spec: VehicleSpec, accel_cmd: float, dt: float, path_length: float
) -> VehicleState:
    """Advance one step: lagged actuation, then semi-implicit Euler.

    The command is clamped to the vehicle's limits before the lag filter, so
    the actuated acceleration can never leave [-max_decel, max_accel].
    Speed is floored at zero; vehicles do not reverse.
    """
    cmd = min(max(accel_cmd, -spec.max_decel), spec.max_accel)
    accel = state.accel + dt * (cmd - state.accel) / spec.tau
    speed = max(0.0, state.speed + accel * dt)
    s = (state.s + speed * dt) % path_length
    return replace(state, s=s, speed=speed, accel=accel, accel_cmd=cmd)


def gap_front(
    follower_s: float, front_s: float, path_length: float, front_length: float
) -> float:
    """Bumper-to-bumper distance to the vehicle ahead along the loop."""
    return (front_s - follower_s) % path_length - front_length
