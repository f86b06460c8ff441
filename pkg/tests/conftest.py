import numpy as np
import pytest
from hypothesis import settings

from secamp.finite_field import FieldSpec

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

PRIMES = (2, 3, 5, 7)


@pytest.fixture
def gf2():
    return FieldSpec(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
