import numpy as np
import pytest

from magdirac.lattice import Grid, bandlimit, gaussian_spinor, make_operator
from magdirac.propagator import assemble_dense


@pytest.fixture(scope="session")
def grid8():
    return Grid(8, 12.0)


@pytest.fixture(scope="session")
def free_op8(grid8):
    return make_operator(grid8, m=1.0)


@pytest.fixture(scope="session")
def free_dense8(free_op8):
    """Dense eigendecomposition of the free massive operator on the N=8 grid (about 8 s)."""
    return assemble_dense(free_op8)


@pytest.fixture(scope="session")
def packet8(grid8):
    return bandlimit(gaussian_spinor(grid8, 1.5, spinor=(1, 0, 0.5, 0), momentum=(0.3, 0, 0)), grid8, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
