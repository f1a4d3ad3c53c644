import numpy as np
import pytest

from lurecert.catalog import (
    example1_nonlinearity,
    example1_system,
    example2_forcing,
    example2_nonlinearity,
    example2_system,
)
from lurecert.system import LureSystem


def random_metzler(rng, n, hurwitz=None, density=0.6):
    """Random Metzler matrix; ``hurwitz`` forces (True) or breaks (False) stability."""
    off = rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < density)
    np.fill_diagonal(off, 0.0)
    row = off.sum(axis=1)
    if hurwitz is None:
        diag = -rng.uniform(0, 2, n) * (1 + row)
    elif hurwitz:
        diag = -(row + off.sum(axis=0)) - rng.uniform(0.1, 2, n)
    else:
        diag = -rng.uniform(0, 1, n)
        diag[0] = rng.uniform(0.1, 1)
    return off + np.diag(diag)


def random_positive_system(rng, n=None, m1=None, m2=None, p1=None, p2=None, density=0.6):
    """Positive system with Hurwitz ``A`` and nonnegative input/output matrices."""
    n = n or int(rng.integers(1, 7))
    m1 = m1 or int(rng.integers(1, 3))
    m2 = m2 or int(rng.integers(1, 3))
    p1 = p1 or int(rng.integers(1, 3))
    p2 = p2 or int(rng.integers(1, 3))
    A = random_metzler(rng, n, hurwitz=True, density=density)
    B1 = rng.uniform(0, 1, (n, m1))
    B2 = rng.uniform(0, 1, (n, m2))
    C1 = rng.uniform(0, 1, (p1, n))
    C2 = rng.uniform(0.05, 1, (p2, n))
    return LureSystem(A, B1, B2, C1, C2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ex1():
    return example1_system()


@pytest.fixture(scope="session")
def ex1_f():
    return example1_nonlinearity()


@pytest.fixture(scope="session")
def ex2():
    return example2_system()


@pytest.fixture(scope="session")
def ex2_f():
    return example2_nonlinearity()


@pytest.fixture(scope="session")
def ex2_w():
    return example2_forcing()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
