"""Cooperative controllers and the delay-triggered fallback state machine.

Two gap-regulation laws are provided: a consensus-style constant-spacing
CACC driven by communicated front/leader telemetry, and a radar-only ACC
with a time-headway policy used as the degraded fallback. A small FSM
switches between them based on measured end-to-end beacon delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

CONTROL_PERIOD = 0.1  # beacon exchange cadence, s
STALENESS_PERIODS = 3  # missing beacons for this many periods synthesize a delay sample

MODE_CACC = "CACC"
MODE_ACC = "ACC"


@dataclass(frozen=True)
class ControllerParams:
    gap_des: float = 5.0  # CACC constant spacing, m
    c1: float = 0.5  # leader weighting
    xi: float = 1.0  # damping
    omega_n: float = 2.0 * math.pi * 0.2  # bandwidth, rad/s (0.2 Hz)
    headway: float = 1.2  # ACC time headway, s
    lam: float = 0.1  # ACC spacing-error gain, 1/s


@dataclass(frozen=True)
class FallbackParams:
    delay_high: float = 0.300  # switch CACC -> ACC above this, s
    delay_low: float = 0.100  # recovery requires staying below this, s
    recovery_window: float = 5.0  # for at least this long, s


@dataclass(frozen=True)
class ControlMessage:
    sender_id: str
    seq: int
    pos_s: float
    speed: float
    accel: float
    ts_l4: int  # simulated send time, ns


@dataclass(frozen=True)
class FallbackState:
    mode: str = MODE_CACC
    good_since: float | None = None  # start of the current below-delay_low streak, s


def cacc_gains(p: ControllerParams) -> tuple[float, float, float, float, float]:
    """Weights (a_front, a_leader, dv_front, dv_leader, spacing) of the CACC law."""
    root = math.sqrt(p.xi * p.xi - 1.0)
    a1 = 1.0 - p.c1
    a2 = p.c1
    a3 = -(2.0 * p.xi - p.c1 * (p.xi + root)) * p.omega_n
    a4 = -(p.xi + root) * p.omega_n * p.c1
    a5 = -p.omega_n * p.omega_n
    return a1, a2, a3, a4, a5


def cacc_accel(
    ego_speed: float,
    front_msg: ControlMessage,
    leader_msg: ControlMessage,
    gap: float,
    p: ControllerParams,
) -> float:
    """Constant-spacing consensus CACC acceleration command.

    The spacing error enters as -(gap - gap_des): positive when too close,
    so the -omega_n^2 weight brakes the vehicle. At the equilibrium of equal
    speeds, zero accelerations and gap == gap_des every term vanishes.
    """
    a1, a2, a3, a4, a5 = cacc_gains(p)
    eps = -(gap - p.gap_des)
    return (
        a1 * front_msg.accel
        + a2 * leader_msg.accel
        + a3 * (ego_speed - front_msg.speed)
        + a4 * (ego_speed - leader_msg.speed)
        + a5 * eps
    )


def acc_accel(ego_speed: float, gap: float, front_speed: float, p: ControllerParams) -> float:
    """Time-headway ACC: a = -(1/T_h) * (de + lambda * e), e = T_h*v - gap."""
    e = -gap + p.headway * ego_speed
    de = ego_speed - front_speed
    return -(de + p.lam * e) / p.headway


def fallback_step(
    fsm: FallbackState, delay_sample: float, now: float, p: FallbackParams
) -> FallbackState:
    """Advance the CACC/ACC fallback FSM with one delay sample.

    Recovery demands an unbroken streak of samples below delay_low covering
    at least recovery_window; any sample at or above delay_low resets it.
    """
    if fsm.mode == MODE_CACC:
        if delay_sample > p.delay_high:
            return FallbackState(mode=MODE_ACC, good_since=None)
        return fsm
    if delay_sample < p.delay_low:
        good_since = fsm.good_since if fsm.good_since is not None else now
        if now - good_since >= p.recovery_window:
            return FallbackState(mode=MODE_CACC, good_since=None)
        return replace(fsm, good_since=good_since)
    return replace(fsm, good_since=None)


def make_control_msg(sender_id: str, s: float, speed: float, accel: float, seq: int, now_ns: int) -> ControlMessage:
    return ControlMessage(sender_id=sender_id, seq=seq, pos_s=s, speed=speed, accel=accel, ts_l4=now_ns)


def leader_accel(current_speed: float, target_speed: float, k: float = 1.0) -> float:
    """Proportional speed tracking used by the platoon leader."""
    return k * (target_speed - current_speed)
