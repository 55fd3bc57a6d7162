import numpy as np
import pytest
from scipy.signal import lfilter

from latticepred import Lattice2D

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def separable_ar_field(shape, rho1=0.5, rho2=0.4, rng=None, burn=100, sigma=1.0):
    """AR(1) x AR(1) field: (1 - rho1 L1)(1 - rho2 L2) x = e."""
    rng = np.random.default_rng(rng)
    n1, n2 = shape
    e = sigma * rng.standard_normal((n1 + burn, n2 + burn))
    x = lfilter([1.0], [1.0, -rho1], e, axis=0)
    x = lfilter([1.0], [1.0, -rho2], x, axis=1)
    return x[burn:, burn:]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sep_lattice():
    return Lattice2D.from_array(separable_ar_field((128, 128), rng=7))
