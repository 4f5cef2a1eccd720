import numpy as np
import pytest

from meanval import measures
from meanval.meanvalue import ConvergenceCriteria


@pytest.fixture
def leb1():
    return measures.lebesgue(1)


@pytest.fixture
def leb2():
    return measures.lebesgue(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fine():
    return ConvergenceCriteria(1e-4, 5, 400)
