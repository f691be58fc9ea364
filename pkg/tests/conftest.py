import numpy as np
import pytest

from qflatlab import Dimension, gallery


@pytest.fixture(scope="session")
def dim2():
    return Dimension(2)


@pytest.fixture(scope="session")
def dim4():
    return Dimension(4)


@pytest.fixture(scope="session")
def sphere2():
    return gallery("sphere", {}, 2)


@pytest.fixture(scope="session")
def flat2():
    return gallery("flat", {}, 2)


def rng(seed=0):
    return np.random.default_rng(seed)
