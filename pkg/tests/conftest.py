import numpy as np
import pytest

from flycap.converter import nominal_params
from flycap.luenberger import default_gains
from flycap.sim import LoadVariation, NoiseConfig, ScenarioConfig, run_scenario


@pytest.fixture(scope="session")
def params():
    return nominal_params()


@pytest.fixture(scope="session")
def nominal_cfg():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def nominal_run(nominal_cfg):
    """The stock scenario (no noise, no load step), sliding observer only."""
    return run_scenario(nominal_cfg, ("sosml",))


@pytest.fixture(scope="session")
def luen_gains(params):
    return default_gains(params)


@pytest.fixture(scope="session")
def luen_nominal_run(params, luen_gains):
    cfg = ScenarioConfig(luenberger=luen_gains)
    return run_scenario(cfg, ("luenberger",))


@pytest.fixture(scope="session")
def noisy_loadstep_cfg(params, luen_gains):
    """Measurement noise plus a 50 percent load-resistance step at 50 ms."""
    return ScenarioConfig(
        luenberger=luen_gains,
        noise=NoiseConfig(kind="uniform", amplitude=0.02, seed=42),
        load=LoadVariation(t_switch=0.05, factor=1.5),
    )


def voltage_error_norm(series):
    return np.sqrt(series.e2 ** 2 + series.e3 ** 2)
