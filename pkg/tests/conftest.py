import numpy as np
import pytest

from rare_mcmc.config import get_settings
from rare_mcmc.services.distributions import Geometric, Pareto


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pareto2():
    return Pareto(2.0)


@pytest.fixture
def geometric_half():
    return Geometric(0.5)


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
