import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fda_kit import build_discrete_sample

#: The six-point demo dataset used throughout the tests.
DEMO_POINTS = [0.0, 0.1, 0.3, 0.4, 0.7, 1.0]
DEMO_VALUES = [
    [109.5, 115.8, 121.9, 130.0, 138.2, 141.1],
    [104.6, 112.3, 118.9, 125.0, 130.1, 133.0],
    [100.4, 107.1, 112.3, 118.6, 124.0, 126.5],
]


@pytest.fixture
def demo_sample():
    return build_discrete_sample(DEMO_POINTS, DEMO_VALUES, name="demo")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
