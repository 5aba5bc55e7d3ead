import numpy as np
import pytest

from morreylab.families import GaussianBump
from morreylab.grid import Domain, GridFunction, sample


@pytest.fixture(scope="session")
def dom1() -> Domain:
    return Domain(1, 64, 2.0, 0.25)


@pytest.fixture(scope="session")
def dom2() -> Domain:
    return Domain(2, 32, 1.0, 0.25)


@pytest.fixture(scope="session")
def bump1(dom1) -> GridFunction:
    return sample(dom1, GaussianBump(1, (0.0,), 0.25, 1.0))


@pytest.fixture(scope="session")
def bump2(dom2) -> GridFunction:
    return sample(dom2, GaussianBump(2, (0.0, 0.0), 0.12, 1.0))


def synthetic(dom: Domain, fn) -> GridFunction:
    """Margin-waived synthetic grid function from a coordinate callable."""
    vals = np.asarray(fn(dom.points()), dtype=float)
    return GridFunction(dom, vals)


@pytest.fixture(scope="session")
def make_synthetic():
    return synthetic
