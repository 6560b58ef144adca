import math

import pytest
from hypothesis import HealthCheck, settings

from latcomm import GeneratorMatrix

settings.register_profile(
    "deterministic",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")


@pytest.fixture
def hexagonal():
    return GeneratorMatrix.from_columns([[1, 0], ["1/2", math.sqrt(3) / 2]])


@pytest.fixture
def skew5():
    # integer basis with a badly skewed second vector; reduces to a
    # rectangular lattice of determinant 5
    return GeneratorMatrix.from_columns([[5, 0], [3, 1]])


@pytest.fixture
def ratio311():
    # upper triangular with ratio 311/1000, so q = (1000, 1)
    return GeneratorMatrix.from_columns([[1, 0], ["311/1000", "101/100"]])
