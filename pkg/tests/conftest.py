import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ref_grid():
    from plasmageom.grid import PhaseGrid
    return PhaseGrid()


@pytest.fixture(scope="session")
def small_grid():
    from plasmageom.grid import PhaseGrid
    return PhaseGrid(Nx=16, Nv=64)


@pytest.fixture(scope="session")
def em_grid():
    from plasmageom.grid import Config, PhaseGrid
    return PhaseGrid(Config.EM_1D2V, Nx=8, Nv=12)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
