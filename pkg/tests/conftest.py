import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from borearm.model import default_model
from borearm.scene import default_scene


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture(scope="session")
def scene():
    return default_scene()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)


def random_in_limit_q(limits, rng, n=1):
    return rng.uniform(limits.lower, limits.upper, size=(n, 7))
