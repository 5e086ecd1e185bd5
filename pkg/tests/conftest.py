import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kfsim.gaussian import Sector
from kfsim.lattice import build_lattice

settings.register_profile("kfsim", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("kfsim")


@pytest.fixture(scope="session")
def lat48():
    return build_lattice(4, 8, "cylinder")


@pytest.fixture(scope="session")
def sector48(lat48):
    return Sector.of(lat48)


@pytest.fixture(scope="session")
def plaquette():
    return build_lattice(1, 1, "open")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
