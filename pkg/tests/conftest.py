import math

import pytest
from hypothesis import HealthCheck, settings

from chaplygin_wing.gas import FreeStream
from chaplygin_wing.geometry import WingAngles, classify_regime
from chaplygin_wing.mesh import build_domain, generate_grid
from chaplygin_wing.solver import epsilon_sweep

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# reference configuration used throughout: q_inf = 2, alpha = pi/6, sigma = 0.5
Q_INF, ALPHA, SIGMA = 2.0, math.pi / 6, 0.5


@pytest.fixture(scope="session")
def fs():
    return FreeStream(Q_INF, ALPHA)


@pytest.fixture(scope="session")
def report_sub(fs):
    return classify_regime(fs, WingAngles(SIGMA, 0.1))


@pytest.fixture(scope="session")
def report_refl(fs):
    return classify_regime(fs, WingAngles(SIGMA, 0.5))


@pytest.fixture(scope="session")
def domain_sub(report_sub):
    return build_domain(report_sub)


@pytest.fixture(scope="session")
def grid33(domain_sub):
    return generate_grid(domain_sub, 33, 33)


@pytest.fixture(scope="session")
def grid65(domain_sub):
    return generate_grid(domain_sub, 65, 65)


@pytest.fixture(scope="session")
def sweep65(grid65):
    return epsilon_sweep(grid65)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
