import math

import pytest

from platoonsim.scenario import (
    ConfigSyntaxError,
    SchemaError,
    ValidationError,
    bundled_scenario_path,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    validate,
)

MINIMAL = """
duration: 10.0
seed: 1
path:
  - [0.0, 0.0]
  - [100.0, 0.0]
  - [100.0, 100.0]
  - [0.0, 100.0]
  - [0.0, 0.0]
gnb:
  position: [50.0, 50.0]
vehicles:
  - id: v1
    initial_s: 20.0
    initial_speed: 20.0
  - id: v2
    initial_s: 11.0
    initial_speed: 20.0
  - id: v3
    initial_s: 2.0
    initial_speed: 20.0
"""


def test_minimal_document_gets_defaults():
    cfg = parse_scenario(MINIMAL)
    assert cfg.dt_sim == 0.01
    assert cfg.max_nodes == 128
    assert cfg.channel.fc == 3.6
    assert cfg.controller.gap_des == 5.0
    assert cfg.controller.omega_n == pytest.approx(2 * math.pi * 0.2)
    assert cfg.link.mcs_count == 29
    assert cfg.fallback.delay_high == 0.300
    assert len(cfg.vehicles) == 3
    assert cfg.channel.h_gnb == cfg.gnb.height  # mirrored, single height source


def test_malformed_yaml_reports_position():
    with pytest.raises(ConfigSyntaxError) as exc:
        parse_scenario("duration: [unclosed\nseed: 1\n")
    assert exc.value.line is not None


def test_unknown_key_is_rejected():
    with pytest.raises(SchemaError, match="unknown key"):
        parse_scenario(MINIMAL + "\ntypo_key: 3\n")
    with pytest.raises(SchemaError, match="channel"):
        parse_scenario(MINIMAL + "\nchannel:\n  h_gnb: 10.0\n")


def test_missing_required_key():
    with pytest.raises(SchemaError, match="required"):
        parse_scenario("duration: 5.0\nseed: 1\n")


def test_wrong_type_is_rejected():
    with pytest.raises(SchemaError, match="expected a number"):
        parse_scenario(MINIMAL.replace("duration: 10.0", "duration: fast"))
    with pytest.raises(SchemaError, match="expected an integer"):
        parse_scenario(MINIMAL.replace("seed: 1", "seed: 1.5"))


def test_node_budget_violation_names_budget_at_parse_time():
    header = "duration: 10.0\nseed: 1\nmax_nodes: 128\n"
    body = (
        "path:\n  - [0.0, 0.0]\n  - [100.0, 0.0]\n  - [100.0, 100.0]\n  - [0.0, 0.0]\n"
        "gnb:\n  position: [0.0, 0.0]\nvehicles:\n"
    )
    for i in range(130):
        body += f"  - id: v{i}\n"
    with pytest.raises(SchemaError, match="node budget"):
        parse_scenario(header + body)


def test_duplicate_vehicle_ids_rejected():
    with pytest.raises(SchemaError, match="duplicate"):
        parse_scenario(MINIMAL.replace("id: v2", "id: v1"))


def test_validate_computes_square_perimeter():
    val = validate(parse_scenario(MINIMAL))
    assert val.path.total_length == pytest.approx(400.0)
    assert val.n_steps == 1000


def test_open_path_yields_path_not_closed():
    bad = MINIMAL.replace("  - [0.0, 0.0]\ngnb", "  - [5.0, 5.0]\ngnb")
    with pytest.raises(ValidationError) as exc:
        validate(parse_scenario(bad))
    assert exc.value.code == "PATH_NOT_CLOSED"


def test_cadence_divisibility():
    cfg = parse_scenario(MINIMAL)  # dt 0.01, control 0.1, channel 0.01
    val = validate(cfg)
    assert val.ticks_per_control == 10
    assert val.ticks_per_channel == 1
    bad = parse_scenario(MINIMAL + "\ndt_sim: 0.03\n")
    with pytest.raises(ValidationError) as exc:
        validate(bad)
    assert exc.value.code == "PERIOD_NOT_DIVISIBLE"


def test_self_intersecting_polygon_rejected():
    bowtie = (
        "\nbuildings:\n"
        "  - [[0.0, 20.0], [10.0, 30.0], [10.0, 20.0], [0.0, 30.0]]\n"
    )
    with pytest.raises(ValidationError) as exc:
        validate(parse_scenario(MINIMAL + bowtie))
    assert exc.value.code == "POLYGON_NOT_SIMPLE"


def test_polygon_needs_three_vertices():
    flat = "\nbuildings:\n  - [[0.0, 20.0], [10.0, 20.0]]\n"
    with pytest.raises(ValidationError) as exc:
        validate(parse_scenario(MINIMAL + flat))
    assert exc.value.code == "POLYGON_TOO_FEW_VERTICES"


def test_nan_and_infinity_do_not_survive_validation():
    with pytest.raises(ValidationError) as exc:
        validate(parse_scenario(MINIMAL + "\ndt_sim: .nan\n"))
    assert exc.value.code == "VALUE_NOT_FINITE"
    with pytest.raises(ValidationError):
        validate(parse_scenario(MINIMAL + "\nduration: .inf\n"))


def test_vehicle_off_path_rejected():
    bad = MINIMAL.replace("initial_s: 20.0", "initial_s: 400.0")
    with pytest.raises(ValidationError) as exc:
        validate(parse_scenario(bad))
    assert exc.value.code == "VEHICLE_OFF_PATH"


def test_range_violations_are_flagged():
    with pytest.raises(ValidationError) as exc:
        validate(parse_scenario(MINIMAL + "\ncontroller:\n  c1: 1.5\n"))
    assert exc.value.code == "VALUE_OUT_OF_RANGE"
    with pytest.raises(ValidationError):
        validate(parse_scenario(MINIMAL + "\nfallback:\n  delay_low: 0.4\n"))


def test_parse_serialize_round_trip():
    cfg = parse_scenario(MINIMAL)
    assert parse_scenario(serialize_scenario(cfg)) == cfg


def test_bundled_scenario_round_trips_and_validates():
    cfg = load_scenario(bundled_scenario_path("luxembourg_loop"))
    assert len(cfg.vehicles) == 3
    assert cfg.path[0] == cfg.path[-1]
    assert len(cfg.buildings) == 4
    assert parse_scenario(serialize_scenario(cfg)) == cfg
    val = validate(cfg)
    assert val.path.total_length == pytest.approx(412.0)


def test_unknown_bundled_scenario():
    with pytest.raises(FileNotFoundError):
        bundled_scenario_path("atlantis")
