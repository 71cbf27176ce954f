import numpy as np
import pytest

from arhlab.hilbert import Curve, Grid
from arhlab.simulate import NoiseSpec


@pytest.fixture(scope="session")
def grid():
    return Grid.uniform(101)


@pytest.fixture(scope="session")
def noise(grid):
    return NoiseSpec.default(grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def fourier(grid, p):
    """p-th default noise eigenfunction as a Curve."""
    from arhlab.simulate import fourier_basis

    return Curve(grid, fourier_basis(grid, p)[p - 1])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
