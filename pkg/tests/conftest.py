import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shotnoise_sbd.domain import Window
from shotnoise_sbd.response import ResponseFunction

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def window():
    return Window(2, 10.0, "torus")


@pytest.fixture
def rf():
    return ResponseFunction.indicator(1.0, 1.0, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
