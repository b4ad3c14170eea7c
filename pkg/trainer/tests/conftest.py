import json
import shutil
from pathlib import Path

import pytest

# Small-network environment in the calibrated desk-scale regime used across
# the trainer tests; matches the simulator's documented experiment setup.
SMALL_ENV_CONFIG = {
    "seed": 7,
    "scheduler": "dynamic_efficient",
    "slot_duration_ns": 400_000.0,
    "sigma_per_km": 0.8,
    "topology": {
        "nodes": 10,
        "edges_per_node": 4,
        "rewire_prob": 0.25,
        "channels_per_edge": 1,
    },
    "noise": {"dephase_rate_hz": 15_000.0},
    "arrivals": {"mean_per_slot": 2.0, "maximum": 4},
}


@pytest.fixture(scope="session")
def env_config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("envcfg") / "small.json"
    path.write_text(json.dumps(SMALL_ENV_CONFIG))
    return path


@pytest.fixture(scope="session")
def simulator_cli():
    exe = shutil.which("entsched")
    if exe is None:
        pytest.skip("simulator CLI not installed")
    return exe
