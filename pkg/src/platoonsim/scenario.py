"""Declarative scenario configuration: parsing, validation, derived geometry.

Scenarios are YAML documents checked against a strict schema: every key is
known, required keys are present, and types match, otherwise parsing fails
with the offending dotted path. Validation then enforces the physical
invariants (closed path, node budget, cadence divisibility, simple building
polygons, finite numbers) and precomputes the derived geometry the engine
needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

import yaml
from shapely.geometry import Polygon

from .bus import BusParams
from .channel import BuildingIndex, ChannelParams
from .control import CONTROL_PERIOD, ControllerParams, FallbackParams
from .link import LinkParams
from .mobility import LeaderProfile, PathGeometry, VehicleSpec

MOBILITY_LOG_PERIOD = 0.1  # s, position logging cadence
METRICS_WINDOW = 1.0  # s, per-second aggregation


class ConfigSyntaxError(Exception):
    """Malformed document; carries line/column when the parser provides them."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class SchemaError(Exception):
    pass


class ValidationError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class GnbSpec:
    position: tuple[float, float]
    height: float = 10.0


@dataclass
class ScenarioConfig:
    duration: float
    seed: int
    path: list[tuple[float, float]]
    gnb: GnbSpec
    vehicles: list[VehicleSpec]
    dt_sim: float = 0.01
    max_nodes: int = 128
    buildings: list[list[tuple[float, float]]] = field(default_factory=list)
    leader: LeaderProfile = field(default_factory=LeaderProfile)
    controller: ControllerParams = field(default_factory=ControllerParams)
    fallback: FallbackParams = field(default_factory=FallbackParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    link: LinkParams = field(default_factory=LinkParams)
    bus: BusParams = field(default_factory=BusParams)


REQUIRED = object()

# key -> (python type, default). Nested sections hold their own tables.
_TOP_SCHEMA = {
    "duration": (float, REQUIRED),
    "seed": (int, REQUIRED),
    "dt_sim": (float, 0.01),
    "max_nodes": (int, 128),
    "path": (list, REQUIRED),
    "buildings": (list, []),
    "gnb": (dict, REQUIRED),
    "vehicles": (list, REQUIRED),
    "leader": (dict, {}),
    "controller": (dict, {}),
    "fallback": (dict, {}),
    "channel": (dict, {}),
    "link": (dict, {}),
    "bus": (dict, {}),
}

_GNB_SCHEMA = {"position": (list, REQUIRED), "height": (float, 10.0)}

_VEHICLE_SCHEMA = {
    "id": (str, REQUIRED),
    "initial_s": (float, 0.0),
    "initial_speed": (float, 0.0),
    "length": (float, 4.0),
    "max_accel": (float, 2.5),
    "max_decel": (float, 6.0),
    "tau": (float, 0.5),
}

_LEADER_SCHEMA = {"v_low": (float, 15.0), "v_high": (float, 25.0), "period": (float, 10.0)}

_CONTROLLER_SCHEMA = {
    "gap_des": (float, 5.0),
    "c1": (float, 0.5),
    "xi": (float, 1.0),
    "omega_n": (float, 2.0 * math.pi * 0.2),
    "headway": (float, 1.2),
    "lambda": (float, 0.1),
}

_FALLBACK_SCHEMA = {
    "delay_high": (float, 0.300),
    "delay_low": (float, 0.100),
    "recovery_window": (float, 5.0),
}

_CHANNEL_SCHEMA = {
    "fc": (float, 3.6),
    "p_ref": (float, 11.5),
    "n0": (float, -95.0),
    "h_ue": (float, 1.5),
    "sigma_los": (float, 4.0),
    "sigma_nlos": (float, 6.0),
    "d_corr": (float, 37.0),
    "update_period": (float, 0.010),
}

_LINK_SCHEMA = {
    "mcs_count": (int, 29),
    "gamma0": (float, -3.5),
    "gamma_step": (float, 1.0),
    "k_slope": (float, 2.0),
    "target_bler": (float, 0.1),
    "eff_min": (float, 0.2),
    "eff_max": (float, 5.5),
    "bw_ue": (float, 5e6),
    "harq_rtt": (float, 0.008),
    "max_harq": (int, 4),
    "rlc_rtt": (float, 0.040),
    "max_rlc": (int, 2),
    "core_latency": (float, 0.010),
    "packet_bytes": (int, 300),
}

_BUS_SCHEMA = {"listen_port": (int, 18830), "max_clients": (int, 16), "inprocess": (bool, True)}


def _coerce(value, typ, path: str):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{path}: expected a number, got {type(value).__name__}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{path}: expected an integer, got {type(value).__name__}")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise SchemaError(f"{path}: expected a boolean, got {type(value).__name__}")
        return value
    if not isinstance(value, typ):
        raise SchemaError(f"{path}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def _apply_schema(doc: dict, schema: dict, path: str) -> dict:
    if not isinstance(doc, dict):
        raise SchemaError(f"{path or 'document'}: expected a mapping")
    unknown = set(doc) - set(schema)
    if unknown:
        raise SchemaError(f"{path or 'document'}: unknown key(s) {sorted(unknown)}")
    out = {}
    for key, (typ, default) in schema.items():
        here = f"{path}.{key}" if path else key
        if key in doc:
            out[key] = _coerce(doc[key], typ, here)
        elif default is REQUIRED:
            raise SchemaError(f"{here}: required key missing")
        else:
            out[key] = default
    return out


def _point(value, path: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError(f"{path}: expected [x, y]")
    return (_coerce(value[0], float, f"{path}[0]"), _coerce(value[1], float, f"{path}[1]"))


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse a YAML scenario document into a fully defaulted ScenarioConfig."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        if mark is not None:
            raise ConfigSyntaxError(str(getattr(e, "problem", e)), mark.line + 1, mark.column + 1) from None
        raise ConfigSyntaxError(str(e)) from None
    if doc is None:
        raise ConfigSyntaxError("empty document")

    top = _apply_schema(doc, _TOP_SCHEMA, "")
    gnb_d = _apply_schema(top["gnb"], _GNB_SCHEMA, "gnb")
    gnb = GnbSpec(position=_point(gnb_d["position"], "gnb.position"), height=gnb_d["height"])

    vehicles = []
    seen_ids = set()
    for i, vd in enumerate(top["vehicles"]):
        v = _apply_schema(vd, _VEHICLE_SCHEMA, f"vehicles[{i}]")
        if v["id"] in seen_ids:
            raise SchemaError(f"vehicles[{i}]: duplicate vehicle id {v['id']!r}")
        seen_ids.add(v["id"])
        vehicles.append(VehicleSpec(**v))

    if len(vehicles) > top["max_nodes"] - 1:
        raise SchemaError(
            f"node budget exceeded: {len(vehicles)} vehicles need "
            f"{len(vehicles) + 1} nodes but max_nodes is {top['max_nodes']} "
            "(one node is reserved for the gNB)"
        )

    path = [_point(p, f"path[{i}]") for i, p in enumerate(top["path"])]
    buildings = []
    for i, poly in enumerate(top["buildings"]):
        if not isinstance(poly, list):
            raise SchemaError(f"buildings[{i}]: expected a list of [x, y] points")
        buildings.append([_point(pt, f"buildings[{i}][{j}]") for j, pt in enumerate(poly)])

    ctrl = _apply_schema(top["controller"], _CONTROLLER_SCHEMA, "controller")
    ctrl["lam"] = ctrl.pop("lambda")
    channel = _apply_schema(top["channel"], _CHANNEL_SCHEMA, "channel")

    return ScenarioConfig(
        duration=top["duration"],
        seed=top["seed"],
        dt_sim=top["dt_sim"],
        max_nodes=top["max_nodes"],
        path=path,
        buildings=buildings,
        gnb=gnb,
        vehicles=vehicles,
        leader=LeaderProfile(**_apply_schema(top["leader"], _LEADER_SCHEMA, "leader")),
        controller=ControllerParams(**ctrl),
        fallback=FallbackParams(**_apply_schema(top["fallback"], _FALLBACK_SCHEMA, "fallback")),
        # h_gnb mirrors gnb.height so the channel model has a single height source
        channel=ChannelParams(h_gnb=gnb.height, **channel),
        link=LinkParams(**_apply_schema(top["link"], _LINK_SCHEMA, "link")),
        bus=BusParams(**_apply_schema(top["bus"], _BUS_SCHEMA, "bus")),
    )


def serialize_scenario(config: ScenarioConfig) -> str:
    """Emit a YAML document that parses back to a structurally equal config."""
    ctrl = asdict(config.controller)
    ctrl["lambda"] = ctrl.pop("lam")
    channel = asdict(config.channel)
    channel.pop("h_gnb")  # derived from gnb.height
    doc = {
        "duration": config.duration,
        "seed": config.seed,
        "dt_sim": config.dt_sim,
        "max_nodes": config.max_nodes,
        "path": [list(p) for p in config.path],
        "buildings": [[list(pt) for pt in poly] for poly in config.buildings],
        "gnb": {"position": list(config.gnb.position), "height": config.gnb.height},
        "vehicles": [asdict(v) for v in config.vehicles],
        "leader": asdict(config.leader),
        "controller": ctrl,
        "fallback": asdict(config.fallback),
        "channel": channel,
        "link": asdict(config.link),
        "bus": asdict(config.bus),
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def config_to_dict(config: ScenarioConfig) -> dict:
    """Plain-dict view of a resolved config (for run.json)."""
    return yaml.safe_load(serialize_scenario(config))


@dataclass(frozen=True)
class ValidatedScenario:
    config: ScenarioConfig
    path: PathGeometry
    buildings: BuildingIndex
    n_steps: int
    ticks_per_control: int
    ticks_per_channel: int
    ticks_per_mobility_log: int
    ticks_per_metrics: int


def _require_finite(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise ValidationError("VALUE_NOT_FINITE", f"{name} is {value}")


def _require(cond: bool, name: str, what: str) -> None:
    if not cond:
        raise ValidationError("VALUE_OUT_OF_RANGE", f"{name} {what}")


def _exact_ratio(period: float, dt: float, name: str) -> int:
    ratio = period / dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9:
        raise ValidationError(
            "PERIOD_NOT_DIVISIBLE", f"dt_sim={dt} does not divide {name}={period}"
        )
    return n


def validate(config: ScenarioConfig) -> ValidatedScenario:
    """Check every scenario invariant and precompute derived geometry."""
    c = config

    for name, value in [
        ("duration", c.duration), ("dt_sim", c.dt_sim),
        ("gnb.height", c.gnb.height), ("leader.v_low", c.leader.v_low),
        ("leader.v_high", c.leader.v_high), ("leader.period", c.leader.period),
        ("controller.gap_des", c.controller.gap_des), ("controller.c1", c.controller.c1),
        ("controller.xi", c.controller.xi), ("controller.omega_n", c.controller.omega_n),
        ("controller.headway", c.controller.headway), ("controller.lambda", c.controller.lam),
        ("fallback.delay_high", c.fallback.delay_high), ("fallback.delay_low", c.fallback.delay_low),
        ("fallback.recovery_window", c.fallback.recovery_window),
        ("channel.fc", c.channel.fc), ("channel.p_ref", c.channel.p_ref),
        ("channel.n0", c.channel.n0), ("channel.h_ue", c.channel.h_ue),
        ("channel.sigma_los", c.channel.sigma_los), ("channel.sigma_nlos", c.channel.sigma_nlos),
        ("channel.d_corr", c.channel.d_corr), ("channel.update_period", c.channel.update_period),
        ("link.gamma0", c.link.gamma0), ("link.gamma_step", c.link.gamma_step),
        ("link.k_slope", c.link.k_slope), ("link.target_bler", c.link.target_bler),
        ("link.eff_min", c.link.eff_min), ("link.eff_max", c.link.eff_max),
        ("link.bw_ue", c.link.bw_ue), ("link.harq_rtt", c.link.harq_rtt),
        ("link.rlc_rtt", c.link.rlc_rtt), ("link.core_latency", c.link.core_latency),
    ]:
        _require_finite(value, name)
    for pt in c.path:
        _require_finite(pt[0], "path.x")
        _require_finite(pt[1], "path.y")
    for poly in c.buildings:
        for pt in poly:
            _require_finite(pt[0], "buildings.x")
            _require_finite(pt[1], "buildings.y")
    _require_finite(c.gnb.position[0], "gnb.position.x")
    _require_finite(c.gnb.position[1], "gnb.position.y")

    _require(c.duration > 0, "duration", "must be positive")
    _require(c.dt_sim > 0, "dt_sim", "must be positive")
    _require(c.max_nodes >= 1, "max_nodes", "must be positive")
    _require(0 < c.leader.v_low < c.leader.v_high, "leader speeds", "need 0 < v_low < v_high")
    _require(c.leader.period > 0, "leader.period", "must be positive")
    _require(c.controller.gap_des > 0, "controller.gap_des", "must be positive")
    _require(0 < c.controller.c1 < 1, "controller.c1", "must be in (0, 1)")
    _require(c.controller.xi >= 1, "controller.xi", "must be >= 1")
    _require(c.controller.omega_n > 0, "controller.omega_n", "must be positive")
    _require(c.controller.headway > 0, "controller.headway", "must be positive")
    _require(c.controller.lam > 0, "controller.lambda", "must be positive")
    _require(
        c.fallback.delay_low < c.fallback.delay_high,
        "fallback thresholds", "need delay_low < delay_high",
    )
    _require(c.fallback.recovery_window > 0, "fallback.recovery_window", "must be positive")
    _require(c.channel.fc > 0, "channel.fc", "must be positive")
    _require(c.channel.sigma_los >= 0, "channel.sigma_los", "must be non-negative")
    _require(c.channel.sigma_nlos >= 0, "channel.sigma_nlos", "must be non-negative")
    _require(c.channel.d_corr > 0, "channel.d_corr", "must be positive")
    _require(c.channel.update_period > 0, "channel.update_period", "must be positive")
    _require(c.channel.h_gnb != c.channel.h_ue, "channel heights", "gNB and UE heights must differ")
    _require(c.link.mcs_count >= 1, "link.mcs_count", "must be at least 1")
    _require(c.link.gamma_step > 0, "link.gamma_step", "must be positive")
    _require(c.link.k_slope > 0, "link.k_slope", "must be positive")
    _require(0 < c.link.target_bler < 1, "link.target_bler", "must be in (0, 1)")
    _require(c.link.eff_min > 0, "link.eff_min", "must be positive")
    _require(
        c.link.mcs_count == 1 or c.link.eff_max > c.link.eff_min,
        "link.eff_max", "efficiency table must be strictly increasing",
    )
    _require(c.link.bw_ue > 0, "link.bw_ue", "must be positive")
    _require(c.link.max_harq >= 1, "link.max_harq", "must be at least 1")
    _require(c.link.max_rlc >= 1, "link.max_rlc", "must be at least 1")
    _require(c.link.harq_rtt >= 0, "link.harq_rtt", "must be non-negative")
    _require(c.link.rlc_rtt >= 0, "link.rlc_rtt", "must be non-negative")
    _require(c.link.core_latency >= 0, "link.core_latency", "must be non-negative")
    _require(c.link.packet_bytes > 0, "link.packet_bytes", "must be positive")

    if len(c.path) < 3:
        raise ValidationError("PATH_TOO_FEW_POINTS", f"path has {len(c.path)} waypoints, need >= 3")
    if c.path[0] != c.path[-1]:
        raise ValidationError(
            "PATH_NOT_CLOSED", f"path endpoints differ: {c.path[0]} vs {c.path[-1]}"
        )
    try:
        geometry = PathGeometry(c.path)
    except ValueError as e:
        raise ValidationError("PATH_ZERO_LENGTH", str(e)) from None

    if len(c.vehicles) > c.max_nodes - 1:
        raise ValidationError(
            "NODE_BUDGET_EXCEEDED",
            f"{len(c.vehicles)} vehicles exceed max_nodes={c.max_nodes} minus the gNB node",
        )

    for i, poly in enumerate(c.buildings):
        if len(poly) < 3:
            raise ValidationError(
                "POLYGON_TOO_FEW_VERTICES", f"buildings[{i}] has {len(poly)} vertices"
            )
        shape = Polygon(poly)
        if not shape.is_valid or shape.area <= 0:
            raise ValidationError("POLYGON_NOT_SIMPLE", f"buildings[{i}] self-intersects or is degenerate")

    for v in c.vehicles:
        _require(v.length > 0, f"vehicle {v.id} length", "must be positive")
        _require(v.max_accel > 0, f"vehicle {v.id} max_accel", "must be positive")
        _require(v.max_decel > 0, f"vehicle {v.id} max_decel", "must be positive")
        _require(v.tau > 0, f"vehicle {v.id} tau", "must be positive")
        _require(v.initial_speed >= 0, f"vehicle {v.id} initial_speed", "must be non-negative")
        if not (0 <= v.initial_s < geometry.total_length):
            raise ValidationError(
                "VEHICLE_OFF_PATH",
                f"vehicle {v.id} initial_s={v.initial_s} outside [0, {geometry.total_length})",
            )

    if c.bus.max_clients < len(c.vehicles) + 1 + 2:
        raise ValidationError(
            "BUS_CAPACITY",
            f"bus.max_clients={c.bus.max_clients} below node count plus orchestrator and metrics",
        )

    ticks_per_control = _exact_ratio(CONTROL_PERIOD, c.dt_sim, "control period")
    ticks_per_channel = _exact_ratio(c.channel.update_period, c.dt_sim, "channel update period")
    ticks_per_mobility = _exact_ratio(MOBILITY_LOG_PERIOD, c.dt_sim, "mobility log period")
    ticks_per_metrics = _exact_ratio(METRICS_WINDOW, c.dt_sim, "metrics window")

    return ValidatedScenario(
        config=c,
        path=geometry,
        buildings=BuildingIndex(c.buildings),
        n_steps=math.ceil(round(c.duration / c.dt_sim, 9)),
        ticks_per_control=ticks_per_control,
        ticks_per_channel=ticks_per_channel,
        ticks_per_mobility_log=ticks_per_mobility,
        ticks_per_metrics=ticks_per_metrics,
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. 'luxembourg_loop'."""
    candidate = resources.files("platoonsim") / "scenarios" / f"{name}.yaml"
    with resources.as_file(candidate) as p:
        if not p.is_file():
            raise FileNotFoundError(f"no bundled scenario named {name!r}")
        return Path(p)
