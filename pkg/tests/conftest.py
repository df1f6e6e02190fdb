import numpy as np
import pytest

from d2dcap.experiments import ExperimentConfig
from d2dcap.link_model import RadioParams


@pytest.fixture(scope="session")
def default_cfg():
    return ExperimentConfig.from_overrides()


@pytest.fixture(scope="session")
def scenario(default_cfg):
    return default_cfg.scenario()


@pytest.fixture(scope="session")
def radio():
    return RadioParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def binomial_se(p, n):
    return float(np.sqrt(p * (1 - p) / n))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
