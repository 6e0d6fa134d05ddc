import math

import numpy as np
import pytest

from platoonsim.channel import (
    BuildingIndex,
    ChannelParams,
    DomainError,
    ShadowState,
    los_blocked,
    pathloss_db,
    sample_channel,
    shadowing_step,
)

SQUARE_FOOTPRINT = BuildingIndex([[(10, 10), (20, 10), (20, 20), (10, 20)]])
NO_BUILDINGS = BuildingIndex([])


def test_los_clear_without_buildings():
    assert not los_blocked((0, 0), (100, 100), NO_BUILDINGS)


def test_los_blocked_through_footprint_center():
    assert los_blocked((0, 0), (30, 30), SQUARE_FOOTPRINT)


def test_los_boundary_grazing_counts_as_blocked():
    # segment passes exactly through the (10, 10) corner vertex
    assert los_blocked((0, 0), (20, 20), SQUARE_FOOTPRINT)


def test_los_near_miss_is_clear():
    assert not los_blocked((0, 0), (9.99, 30), SQUARE_FOOTPRINT)


def test_pathloss_reference_point():
    assert pathloss_db(1.0, 1.0, los=True) == 28.0


def test_pathloss_los_documented_value():
    assert pathloss_db(100.0, 3.6, los=True) == pytest.approx(83.126, abs=0.01)


def test_pathloss_nlos_documented_value():
    # max(61.13, 63.75) at 10 m
    assert pathloss_db(10.0, 3.6, los=False, h_ue=1.5) == pytest.approx(63.746, abs=0.01)


def test_pathloss_rejects_below_model_validity():
    with pytest.raises(DomainError):
        pathloss_db(0.5, 3.6, los=True)


def test_pathloss_monotone_in_distance():
    grid = np.logspace(0.0, 3.0, 1000)
    for los in (True, False):
        values = [pathloss_db(d, 3.6, los) for d in grid]
        assert all(b > a for a, b in zip(values, values[1:]))


def test_nlos_dominates_los_on_grid():
    for d in np.logspace(0.0, 3.0, 1000):
        assert pathloss_db(d, 3.6, False) >= pathloss_db(d, 3.6, True)


def test_shadowing_zero_displacement_is_identity():
    rng = np.random.default_rng(0)
    assert shadowing_step(3.7, 0.0, 4.0, 37.0, rng) == 3.7


def test_shadowing_large_displacement_forgets_state():
    rng = np.random.default_rng(1)
    draws = {shadowing_step(prev, 1e9, 4.0, 37.0, np.random.default_rng(5)) for prev in (-50.0, 0.0, 50.0)}
    assert len(draws) == 1  # rho ~ 0: result independent of prev


def test_shadowing_stationary_std_matches_sigma():
    sigma, d_corr, disp = 4.0, 37.0, 10.0
    rng = np.random.default_rng(1234)
    value = sigma * rng.standard_normal()  # start in the stationary law
    samples = np.empty(100_000)
    for i in range(samples.size):
        value = shadowing_step(value, disp, sigma, d_corr, rng)
        samples[i] = value
    assert abs(samples.std() - sigma) / sigma < 0.02


def test_shadowing_stream_is_pure_function_of_seed():
    def trace(seed):
        rng = np.random.default_rng(seed)
        v, out = 0.0, []
        for _ in range(50):
            v = shadowing_step(v, 5.0, 6.0, 37.0, rng)
            out.append(v)
        return out

    assert trace(9) == trace(9)
    assert trace(9) != trace(10)


def test_sample_channel_composition():
    # LoS at d3d = 100 m with defaults and zero shadow:
    # rsrp = 11.5 - 83.13 = -71.63 dBm, snr = 23.37 dB
    params = ChannelParams(sigma_los=0.0, sigma_nlos=0.0)
    d2d = math.sqrt(100.0**2 - (params.h_gnb - params.h_ue) ** 2)
    shadow = ShadowState()
    sample = sample_channel(
        "v", (d2d, 0.0), (0.0, 0.0), params, NO_BUILDINGS, shadow, np.random.default_rng(0), t=0.0
    )
    assert sample.los
    assert sample.d3d == pytest.approx(100.0)
    assert sample.rsrp == pytest.approx(11.5 - 83.126, abs=0.01)
    assert sample.snr == pytest.approx(sample.rsrp + 95.0)
    assert sample.rsrp == pytest.approx(params.p_ref - sample.pl - sample.shadow)


def test_sample_channel_zero_displacement_keeps_shadow():
    params = ChannelParams()
    shadow = ShadowState()
    rng = np.random.default_rng(3)
    s1 = sample_channel("v", (50.0, 0.0), (0.0, 0.0), params, NO_BUILDINGS, shadow, rng, 0.0)
    s2 = sample_channel("v", (50.0, 0.0), (0.0, 0.0), params, NO_BUILDINGS, shadow, rng, 0.01)
    assert s2.shadow == s1.shadow
    assert s2.rsrp == s1.rsrp


def test_sample_channel_blocked_uses_nlos_branch():
    params = ChannelParams()
    shadow = ShadowState()
    pos = (30.0, 30.0)
    sample = sample_channel(
        "v", pos, (0.0, 0.0), params, SQUARE_FOOTPRINT, shadow, np.random.default_rng(0), 0.0
    )
    assert not sample.los
    assert sample.pl >= pathloss_db(sample.d3d, params.fc, los=True)


def test_sample_channel_d3d_floor_is_height_difference():
    params = ChannelParams()
    shadow = ShadowState()
    sample = sample_channel(
        "v", (0.0, 0.0), (0.0, 0.0), params, NO_BUILDINGS, shadow, np.random.default_rng(0), 0.0
    )
    assert sample.d3d == pytest.approx(abs(params.h_gnb - params.h_ue))


def test_los_transition_redraws_shadow_fresh():
    params = ChannelParams(sigma_los=4.0, sigma_nlos=6.0)
    shadow = ShadowState()
    rng = np.random.default_rng(8)
    sample_channel("v", (5.0, 30.0), (0.0, 0.0), params, SQUARE_FOOTPRINT, shadow, rng, 0.0)
    assert shadow.los
    # step into the occluded sector: fresh NLoS draw, not a correlated update
    rng_clone = np.random.default_rng(8)
    rng_clone.standard_normal()  # consume the first draw
    expected = 6.0 * rng_clone.standard_normal()
    s2 = sample_channel("v", (30.0, 30.0), (0.0, 0.0), params, SQUARE_FOOTPRINT, shadow, rng, 0.01)
    assert not s2.los
    assert s2.shadow == pytest.approx(expected, rel=1e-12)
