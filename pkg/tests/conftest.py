import numpy as np
import pytest

from pmclab.grid import SphereGrid
from pmclab.region import StarRegion


@pytest.fixture(scope="session")
def tiny_grid():
    return SphereGrid(8, 16)


@pytest.fixture(scope="session")
def small_grid():
    return SphereGrid(16, 32)


@pytest.fixture(scope="session")
def mid_grid():
    return SphereGrid(32, 64)


@pytest.fixture(scope="session")
def default_grid():
    return SphereGrid(64, 128)


def smooth_region(grid, rng, amp=0.15, center_scale=0.3, mean_log=0.0):
    """Random smooth star-shaped region: low-degree polynomial log-radius field."""
    d = grid.directions
    a = rng.normal(size=3)
    B = rng.normal(size=(3, 3))
    u = mean_log + amp * (d @ a / 2 + np.einsum("...i,ij,...j->...", d, B, d) / 4)
    return StarRegion(grid, center_scale * rng.normal(size=3), u)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
