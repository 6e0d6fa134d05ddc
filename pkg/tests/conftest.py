import time

import pytest
from hypothesis import settings

from platoonsim.orchestrator import run_scenario
from platoonsim.scenario import bundled_scenario_path, load_scenario, validate

settings.register_profile("det", derandomize=True, max_examples=60)
settings.load_profile("det")


@pytest.fixture(scope="session")
def sample_scenario():
    return validate(load_scenario(bundled_scenario_path("luxembourg_loop")))


@pytest.fixture(scope="session")
def golden_run(sample_scenario, tmp_path_factory):
    """Natural 100 s run of the sample scenario; records wall time."""
    out = tmp_path_factory.mktemp("golden")
    t0 = time.monotonic()
    run_scenario(sample_scenario, out)
    wall = time.monotonic() - t0
    return {"dir": out, "wall_s": wall}


@pytest.fixture(scope="session")
def golden_repeat_run(sample_scenario, tmp_path_factory):
    out = tmp_path_factory.mktemp("golden_repeat")
    run_scenario(sample_scenario, out)
    return {"dir": out}


@pytest.fixture(scope="session")
def seed_variant_run(sample_scenario, tmp_path_factory):
    out = tmp_path_factory.mktemp("seed_variant")
    run_scenario(sample_scenario, out, seed=43)
    return {"dir": out}


@pytest.fixture(scope="session")
def degraded_run(sample_scenario, tmp_path_factory):
    """Sample run with 400 ms delay forced on packets sent in [70, 75)."""
    out = tmp_path_factory.mktemp("degraded")
    run_scenario(sample_scenario, out, force_degradation=(70.0, 5.0))
    return {"dir": out}
