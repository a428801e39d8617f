import json

import pytest

from vmdforecast.pipeline import ExperimentConfig
from vmdforecast.synthetic import SyntheticSpec, synthetic_profile, write_load_csv


@pytest.fixture(scope="session")
def household_csv(tmp_path_factory):
    """30 days of synthetic 10-minute load: enough for five baseline test days."""
    path = tmp_path_factory.mktemp("data") / "house.csv"
    write_load_csv(synthetic_profile(SyntheticSpec(days=30, seed=11), "house"), path)
    return path


@pytest.fixture
def small_config(household_csv, tmp_path):
    def make(**overrides):
        settings = dict(households={"house": str(household_csv)}, output_dir=str(tmp_path / "runs"),
                        k_list=["none", 3], i_list=[1], epochs=1, batch=64, train_stride=8,
                        vmd_max_iters=60)
        settings.update(overrides)
        return ExperimentConfig(**settings).validate()
    return make


@pytest.fixture
def config_file(household_csv, tmp_path):
    def write(**overrides):
        settings = dict(households={"house": str(household_csv)}, output_dir="runs", k_list=["none"],
                        i_list=[1], epochs=1, train_stride=16, vmd_max_iters=60)
        settings.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(settings))
        return path
    return write
