import numpy as np
import pytest

from fanocal.config import preset
from fanocal.detection import simulate_runs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def simulate_preset(name, **overrides):
    config = preset(name, **overrides)
    return config, simulate_runs(config.model, config.chain, config.transmittances,
                                 config.shots_per_run, config.master_seed)


@pytest.fixture(scope="session")
def coherent_dataset():
    return simulate_preset("coherent")


@pytest.fixture(scope="session")
def thermal_dataset():
    return simulate_preset("thermal")


@pytest.fixture(scope="session")
def pseudo_thermal_dataset():
    return simulate_preset("pseudo_thermal")


@pytest.fixture(scope="session")
def sub_poissonian_dataset():
    return simulate_preset("sub_poissonian")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    from test_acceptance import ACCEPTANCE_KEY

    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
