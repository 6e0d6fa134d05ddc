"""Position-driven channel emulation.

Each (vehicle, gNB) link gets a single scalar gain per 10 ms refresh:
building-footprint LoS occlusion selects between the urban-macro LoS and
NLoS pathloss laws, and a Gauss-Markov process adds spatially correlated
log-normal shadowing. RSRP and SNR follow algebraically from a calibrated
reference power and a fixed noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from shapely.geometry import LineString, Polygon
from shapely.prepared import prep


class DomainError(ValueError):
    """Input outside the validity range of the propagation model."""


@dataclass(frozen=True)
class ChannelParams:
    fc: float = 3.6  # carrier frequency, GHz
    p_ref: float = 11.5  # reference power at 0 dB pathloss, dBm (calibration knob)
    n0: float = -95.0  # noise floor, dBm
    h_gnb: float = 10.0  # m
    h_ue: float = 1.5  # m
    sigma_los: float = 4.0  # shadowing std, dB
    sigma_nlos: float = 6.0  # dB
    d_corr: float = 37.0  # shadowing correlation distance, m
    update_period: float = 0.010  # s


@dataclass(frozen=True)
class ChannelSample:
    t: float
    veh_id: str
    los: bool
    d3d: float
    pl: float  # dB
    shadow: float  # dB
    rsrp: float  # dBm, = p_ref - pl - shadow
    snr: float  # dB, = rsrp - n0


class BuildingIndex:
    """Building footprints with bounding-box prefilter for occlusion tests."""

    def __init__(self, polygons: list[list[tuple[float, float]]]):
        self.polygons = [Polygon(p) for p in polygons]
        self._prepared = [prep(p) for p in self.polygons]
        self.bboxes = [p.bounds for p in self.polygons]

    def blocks_segment(self, p1: tuple[float, float], p2: tuple[float, float]) -> bool:
        if not self.polygons:
            return False
        sx0, sx1 = min(p1[0], p2[0]), max(p1[0], p2[0])
        sy0, sy1 = min(p1[1], p2[1]), max(p1[1], p2[1])
        seg = None
        for (bx0, by0, bx1, by1), prepared in zip(self.bboxes, self._prepared):
            if sx1 < bx0 or sx0 > bx1 or sy1 < by0 or sy0 > by1:
                continue
            if seg is None:
                seg = LineString([p1, p2])
            if prepared.intersects(seg):
                return True
        return False


def los_blocked(
    p1: tuple[float, float], p2: tuple[float, float], buildings: BuildingIndex
) -> bool:
    """True iff the 2D segment p1-p2 touches any footprint, boundary included.

    Buildings are treated as infinitely tall prisms, so only the horizontal
    projection matters; grazing a polygon edge or vertex counts as blocked.
    """
    return buildings.blocks_segment(p1, p2)


def pathloss_db(d3d: float, fc: float, los: bool, h_ue: float = 1.5) -> float:
    """Urban-macro pathloss, below-breakpoint regime.

    LoS: 28 + 22 log10(d3d) + 20 log10(fc).
    NLoS is floored by the LoS value at the same distance.
    """
    if d3d < 1.0:
        raise DomainError(f"d3d={d3d:.3f} m below 1 m model validity")
    pl_los = 28.0 + 22.0 * math.log10(d3d) + 20.0 * math.log10(fc)
    if los:
        return pl_los
    pl_nlos = 13.54 + 39.08 * math.log10(d3d) + 20.0 * math.log10(fc) - 0.6 * (h_ue - 1.5)
    return max(pl_los, pl_nlos)


def shadowing_step(prev: float, displacement: float, sigma: float, d_corr: float, rng) -> float:
    """Gauss-Markov update of the shadowing value after moving `displacement` m.

    rho = exp(-displacement/d_corr); the innovation keeps the stationary
    std equal to sigma. Zero displacement returns prev exactly.
    """
    rho = math.exp(-displacement / d_corr)
    return rho * prev + math.sqrt(1.0 - rho * rho) * sigma * rng.standard_normal()


@dataclass
class ShadowState:
    """Per-vehicle shadowing memory; correlation resets on LoS transitions."""

    value: float = 0.0
    los: bool | None = None  # None until the first sample
    last_pos: tuple[float, float] | None = None


def sample_channel(
    veh_id: str,
    pos: tuple[float, float],
    gnb_pos: tuple[float, float],
    params: ChannelParams,
    buildings: BuildingIndex,
    shadow: ShadowState,
    rng,
    t: float,
) -> ChannelSample:
    """One channel refresh: occlusion, pathloss, shadowing, RSRP/SNR.

    Mutates `shadow` in place. On a LoS<->NLoS transition (and on the first
    sample) the shadowing is redrawn fresh from the stationary distribution
    of the new regime rather than carrying over correlated state.
    """
    dx, dy = pos[0] - gnb_pos[0], pos[1] - gnb_pos[1]
    dh = params.h_gnb - params.h_ue
    d3d = math.sqrt(dx * dx + dy * dy + dh * dh)
    los = not los_blocked(pos, gnb_pos, buildings)
    pl = pathloss_db(d3d, params.fc, los, params.h_ue)
    sigma = params.sigma_los if los else params.sigma_nlos

    if shadow.los is None or shadow.los != los:
        shadow.value = sigma * rng.standard_normal()
    else:
        disp = math.hypot(pos[0] - shadow.last_pos[0], pos[1] - shadow.last_pos[1])
        shadow.value = shadowing_step(shadow.value, disp, sigma, params.d_corr, rng)
    shadow.los = los
    shadow.last_pos = pos

    rsrp = params.p_ref - pl - shadow.value
    return ChannelSample(
        t=t,
        veh_id=veh_id,
        los=los,
        d3d=d3d,
        pl=pl,
        shadow=shadow.value,
        rsrp=rsrp,
        snr=rsrp - params.n0,
    )
