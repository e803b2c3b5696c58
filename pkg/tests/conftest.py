import numpy as np
import pytest

from latentskill.bodies import default_body
from latentskill.physics import Simulator


@pytest.fixture
def sim():
    return Simulator()


@pytest.fixture
def spec():
    return default_body()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
