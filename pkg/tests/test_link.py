import math

import numpy as np
import pytest

from platoonsim.link import (
    LinkParams,
    LinkState,
    bler,
    e2e_delay,
    select_mcs,
    service_time,
    transmit,
)

P = LinkParams()


def test_bler_midpoint_is_half():
    for m in (0, 12, 28):
        assert bler(P.gamma(m), m, P) == pytest.approx(0.5)


def test_bler_asymptotes():
    assert bler(1e6, 10, P) == 0.0
    assert bler(-1e6, 10, P) == 1.0


def test_bler_two_db_above_threshold():
    m = 5
    assert bler(P.gamma(m) + 2.0, m, P) == pytest.approx(1.0 / (1.0 + math.exp(4.0)), rel=1e-12)


def test_select_mcs_clamps():
    assert select_mcs(1e4, P) == 28
    assert select_mcs(-1e4, P) == 0


def test_select_mcs_matches_brute_force_scan():
    # independent scan over all 29 BLER values
    for snr in (-5.0, 0.0, 3.3, 10.0, 17.7, 26.0, 40.0):
        qualifying = [m for m in range(P.mcs_count) if bler(snr, m, P) <= P.target_bler]
        expected = max(qualifying) if qualifying else 0
        assert select_mcs(snr, P) == expected
    assert select_mcs(10.0, P) == 12  # documented point with defaults


def test_select_mcs_never_exceeds_target_except_floor():
    for snr in np.linspace(-20, 40, 601):
        m = select_mcs(snr, P)
        if m > 0:
            assert bler(snr, m, P) <= P.target_bler + 1e-12


def test_service_time_reference_and_linearity():
    p = LinkParams(mcs_count=1, eff_min=1.0, eff_max=1.0, bw_ue=5e6)
    assert service_time(300, 0, p) == pytest.approx(480e-6, rel=1e-12)
    assert service_time(600, 0, p) == pytest.approx(2 * service_time(300, 0, p))
    ratio = service_time(300, 28, P) / service_time(300, 0, P)
    assert ratio == pytest.approx(P.eff(0) / P.eff(28), rel=1e-12)


def _fixed_bler_params(p_fail: float) -> LinkParams:
    """Single-MCS table anchored so every attempt fails with exactly p_fail."""
    gamma0 = math.log((1.0 - p_fail) / p_fail) / 2.0 if 0 < p_fail < 1 else 0.0
    # bler(0, 0) = 1/(1+exp(2*(0 - (-gamma0)))) -- pick gamma0 so snr=0 hits p_fail
    return LinkParams(mcs_count=1, gamma0=-gamma0, eff_min=1.0, eff_max=1.0)


def test_transmit_lossless_path():
    p = LinkParams()
    state = LinkState(veh_id="v", leg="UL")
    out = transmit(300, state, snr_now=1e4, now=5.0, rng=np.random.default_rng(0), p=p)
    assert out.delivered and out.attempts == 1
    assert out.delay == pytest.approx(service_time(300, 28, p) + p.core_latency)
    assert out.deliver_t == pytest.approx(5.0 + service_time(300, 28, p))


def test_transmit_exhausts_all_retries_at_bler_one():
    p = LinkParams()
    state = LinkState(veh_id="v", leg="UL")
    out = transmit(300, state, snr_now=-1e4, now=0.0, rng=np.random.default_rng(0), p=p)
    assert not out.delivered
    assert out.attempts == p.max_harq * p.max_rlc


def test_transmit_timeline_includes_harq_and_rlc_waits():
    p = LinkParams()
    state = LinkState(veh_id="v", leg="UL")
    out = transmit(300, state, snr_now=-1e4, now=0.0, rng=np.random.default_rng(0), p=p)
    svc = service_time(300, 0, p)
    # 8 attempts: 6 harq gaps within cycles, 1 rlc gap between cycles
    expected_end = 8 * svc + 6 * p.harq_rtt + p.rlc_rtt
    assert out.deliver_t == pytest.approx(expected_end)
    # server airtime excludes the waits
    assert state.busy_until == pytest.approx(8 * svc)


def test_transmit_fifo_in_order_delivery():
    p = _fixed_bler_params(0.9)
    state = LinkState(veh_id="v", leg="DL")
    rng = np.random.default_rng(123)
    outs = [transmit(300, state, 0.0, now=0.0, rng=rng, p=p) for _ in range(50)]
    delivered = [o for o in outs if o.delivered]
    times = [o.deliver_t for o in delivered]
    assert times == sorted(times)


def test_transmit_work_conservation_under_backlog():
    p = LinkParams()
    state = LinkState(veh_id="v", leg="UL")
    rng = np.random.default_rng(1)
    svc = service_time(300, 28, p)
    outs = [transmit(300, state, 1e4, now=0.0, rng=rng, p=p) for _ in range(10)]
    # back-to-back service, no idling: k-th packet completes at (k+1)*svc
    for k, out in enumerate(outs):
        assert out.deliver_t == pytest.approx((k + 1) * svc)


def test_added_packet_never_speeds_up_later_ones():
    p = LinkParams()

    def delays(extra):
        state = LinkState(veh_id="v", leg="UL")
        rng = np.random.default_rng(0)
        if extra:
            transmit(300, state, 1e4, now=0.0, rng=rng, p=p)
        probe = transmit(300, state, 1e4, now=0.0, rng=rng, p=p)
        return probe.delay

    assert delays(extra=True) >= delays(extra=False)


def _enumerate_mean_attempts(p_fail: float, max_attempts: int) -> float:
    """Brute-force enumeration over attempt outcomes of the retry chain."""
    mean = 0.0
    for k in range(1, max_attempts + 1):
        mean += k * (p_fail ** (k - 1)) * (1.0 - p_fail)
    mean += max_attempts * (p_fail**max_attempts)
    return mean


@pytest.mark.parametrize("p_fail", [0.1, 0.3, 0.5])
def test_mean_attempts_match_truncated_geometric(p_fail):
    p = _fixed_bler_params(p_fail)
    assert bler(0.0, 0, p) == pytest.approx(p_fail, rel=1e-12)
    rng = np.random.default_rng(202)
    n = 100_000
    total = 0
    state = LinkState(veh_id="v", leg="UL")
    for _ in range(n):
        out = transmit(300, state, 0.0, now=state.busy_until + 1.0, rng=rng, p=p)
        total += out.attempts
    expected = _enumerate_mean_attempts(p_fail, p.max_attempts)
    assert total / n == pytest.approx(expected, rel=0.01)


def test_e2e_delay_adds_leg_delays():
    p = LinkParams()
    s1 = LinkState(veh_id="v", leg="UL")
    s2 = LinkState(veh_id="v", leg="DL")
    rng = np.random.default_rng(0)
    ul = transmit(300, s1, 1e4, now=0.0, rng=rng, p=p)
    dl = transmit(300, s2, 1e4, now=ul.deliver_t, rng=rng, p=p)
    assert e2e_delay(ul, dl) == pytest.approx(ul.delay + dl.delay)
    # light load with defaults: two legs well under 25 ms
    assert e2e_delay(ul, dl) < 0.025


def test_e2e_delay_undefined_for_dropped_leg():
    p = LinkParams()
    s = LinkState(veh_id="v", leg="UL")
    rng = np.random.default_rng(0)
    ok = transmit(300, s, 1e4, now=0.0, rng=rng, p=p)
    dropped = transmit(300, s, -1e4, now=1.0, rng=rng, p=p)
    with pytest.raises(ValueError):
        e2e_delay(ok, dropped)


def test_retx_counter_accumulates():
    p = _fixed_bler_params(1.0 - 1e-12)
    state = LinkState(veh_id="v", leg="UL")
    transmit(300, state, 0.0, now=0.0, rng=np.random.default_rng(0), p=p)
    assert state.retx_count_window == p.max_attempts - 1
