import numpy as np
import pytest
from hypothesis import settings

from pwexpand.gallery import load_example
from pwexpand.maps import PiecewiseMap

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def doubling():
    return PiecewiseMap.from_exprs([0], ["2*x + 1", "2*x - 1"])


@pytest.fixture(scope="session")
def tripling():
    return PiecewiseMap.from_exprs([-1 / 3, 1 / 3], ["3*x + 2", "3*x", "3*x - 2"])


@pytest.fixture(scope="session")
def control():
    """Slope-2 map with the invariant subinterval (0, 1)."""
    return PiecewiseMap.from_exprs([0, 0.5], ["2*x + 1", "2*x", "2*x - 1"])


@pytest.fixture(scope="session")
def lambda4():
    return load_example("lambda4")


@pytest.fixture(scope="session")
def figure1():
    return load_example("figure1")


@pytest.fixture(scope="session")
def doubling_family():
    return load_example("doubling")


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


# acceptance report ------------------------------------------------------------

ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(k, passed, detail)``."""

    def record(k, passed, detail):
        line = f"acceptance {k}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append((k, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
