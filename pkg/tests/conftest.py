import numpy as np
import pytest
from hypothesis import settings

from kppspeed.grid import PeriodicGrid, random_smooth

settings.register_profile("default", max_examples=20, deadline=None)
settings.load_profile("default")

# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid():
    return PeriodicGrid(1.0, 256)


def smooth_field(rng, L=1.0, N=256):
    return random_smooth(PeriodicGrid(L, N), rng, modes=int(rng.integers(1, 6)), amplitude=float(rng.uniform(0.1, 0.9)))
