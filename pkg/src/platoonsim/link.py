"""Abstract cellular link: MCS adaptation, BLER, HARQ/RLC retries, queueing.

Every packet traverses two legs (uplink to the gNB, then a downlink clone
per receiver). A leg is a FIFO server per (vehicle, direction): every
attempt, retransmissions included, occupies the server for its service
time, which is what couples error bursts to queueing delay. The harq_rtt
and rlc_rtt waits between attempts extend only the affected packet's own
completion time, mirroring parallel HARQ processes that keep the radio
busy with other packets during a round trip; delivery to the upper layer
stays in enqueue order. Block errors follow a logistic curve per MCS; the
scheduler picks the fastest MCS whose predicted BLER stays at or below
the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LinkParams:
    mcs_count: int = 29
    gamma0: float = -3.5  # BLER midpoint for MCS 0, dB
    gamma_step: float = 1.0  # dB per MCS index
    k_slope: float = 2.0  # logistic steepness, 1/dB
    target_bler: float = 0.1
    eff_min: float = 0.2  # spectral efficiency of MCS 0, bit/s/Hz
    eff_max: float = 5.5  # of the top MCS; linear in between
    bw_ue: float = 5e6  # bandwidth share per UE, Hz
    harq_rtt: float = 0.008  # s
    max_harq: int = 4  # attempts per HARQ cycle
    rlc_rtt: float = 0.040  # s
    max_rlc: int = 2  # HARQ cycles
    core_latency: float = 0.010  # s per leg
    packet_bytes: int = 300

    def eff(self, mcs: int) -> float:
        if self.mcs_count == 1:
            return self.eff_min
        return self.eff_min + mcs * (self.eff_max - self.eff_min) / (self.mcs_count - 1)

    def gamma(self, mcs: int) -> float:
        return self.gamma0 + mcs * self.gamma_step

    @property
    def max_attempts(self) -> int:
        return self.max_harq * self.max_rlc


@dataclass
class LinkState:
    """Server state of one (vehicle, direction) leg.

    The FIFO queue is represented as a time backlog: busy_until is when the
    server's airtime frees up, and packets submitted in enqueue order start
    service at max(enqueue time, busy_until). last_deliver_t enforces
    in-order delivery when retry waits let a later packet finish first.
    """

    veh_id: str
    leg: str  # "UL" or "DL"
    busy_until: float = 0.0
    last_deliver_t: float = 0.0
    current_mcs: int = 0
    retx_count_window: int = 0  # retransmissions in the open metrics window


@dataclass(frozen=True)
class LinkOutcome:
    delivered: bool
    attempts: int
    enqueue_t: float
    deliver_t: float  # chain completion time (drop time if not delivered)
    delay: float  # deliver_t - enqueue_t + core_latency
    mcs_used: int
    leg: str
    attempt_times: tuple[float, ...] = field(default=())


def bler(snr: float, mcs: int, p: LinkParams) -> float:
    """Logistic block-error probability: 0.5 at the per-MCS threshold."""
    x = p.k_slope * (snr - p.gamma(mcs))
    if x > 500.0:
        return 0.0
    if x < -500.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def select_mcs(snr: float, p: LinkParams) -> int:
    """Largest MCS whose BLER at `snr` meets the target; 0 if none does."""
    best = 0
    for m in range(p.mcs_count - 1, -1, -1):
        if bler(snr, m, p) <= p.target_bler:
            best = m
            break
    return best


def service_time(nbytes: int, mcs: int, p: LinkParams) -> float:
    if nbytes <= 0:
        raise ValueError("packet size must be positive")
    return (8.0 * nbytes) / (p.eff(mcs) * p.bw_ue)


def transmit(
    nbytes: int, state: LinkState, snr_now: float, now: float, rng, p: LinkParams
) -> LinkOutcome:
    """Run one packet through the leg's retry chain and advance the server.

    All attempts of the chain use the SNR sample passed in (the channel is
    refreshed faster than a worst-case chain anyway). Failed attempts wait
    harq_rtt before the next try and rlc_rtt at HARQ-cycle boundaries, up to
    max_harq * max_rlc attempts, then the packet is dropped; dropping is a
    normal outcome, not an error. Every attempt consumes server airtime, the
    waits extend only this packet's completion, and deliver_t is floored by
    the previous delivery so the leg hands packets up in order.
    """
    mcs = select_mcs(snr_now, p)
    p_fail = bler(snr_now, mcs, p)
    svc = service_time(nbytes, mcs, p)

    start = max(now, state.busy_until)
    t = start
    attempts = 0
    attempt_times = []
    delivered = False
    while True:
        attempt_times.append(t)
        t += svc
        attempts += 1
        if rng.random() >= p_fail:
            delivered = True
            break
        if attempts >= p.max_attempts:
            break
        t += p.rlc_rtt if attempts % p.max_harq == 0 else p.harq_rtt

    state.busy_until = start + attempts * svc
    state.current_mcs = mcs
    state.retx_count_window += attempts - 1
    deliver_t = t
    if delivered:
        deliver_t = max(t, state.last_deliver_t)
        state.last_deliver_t = deliver_t
    return LinkOutcome(
        delivered=delivered,
        attempts=attempts,
        enqueue_t=now,
        deliver_t=deliver_t,
        delay=deliver_t - now + p.core_latency,
        mcs_used=mcs,
        leg=state.leg,
        attempt_times=tuple(attempt_times),
    )


def e2e_delay(ul: LinkOutcome, dl: LinkOutcome) -> float:
    """End-to-end delay of a relayed packet: the two leg delays add."""
    if not (ul.delivered and dl.delivered):
        raise ValueError("end-to-end delay undefined for dropped legs")
    return ul.delay + dl.delay
