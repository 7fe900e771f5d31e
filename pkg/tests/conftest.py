from __future__ import annotations

import numpy as np
import pytest

from diskheat.geometry import TimeGrid, build_radial_grid

# one summary line per acceptance check, echoed after the test table so
# the pass/fail record survives pytest's output capture
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def grid_default():
    return build_radial_grid(R=1.0, M=256, n=2, r_star=0.5)


@pytest.fixture(scope="session")
def grid_small():
    return build_radial_grid(R=1.0, M=64, n=2, r_star=0.5)


@pytest.fixture(scope="session")
def tgrid_default():
    return TimeGrid(T=1.0, N=512, theta=0.5)


@pytest.fixture(scope="session")
def tgrid_small():
    return TimeGrid(T=1.0, N=128, theta=0.5)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
