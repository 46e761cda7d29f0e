import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flevy.levy import CompoundPoisson, TruncatedStable, make_model

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def cpp_model():
    """Symmetric compensated Poisson difference, jumps +-1 at rate 1/2 each."""
    return make_model(0.0, 0.0, CompoundPoisson(((1.0, 0.5), (-1.0, 0.5))))


@pytest.fixture
def stable_model():
    return make_model(0.0, 0.0, TruncatedStable(1.0))


@pytest.fixture
def brownian_model():
    return make_model(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
