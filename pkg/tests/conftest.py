import numpy as np
import pytest

from queue_infer import distributions as dist
from queue_infer.simulator import SimConfig, simulate_discrete


@pytest.fixture(scope="session")
def poisson_geometric():
    return dist.poisson(1.0), dist.geometric(0.5)


@pytest.fixture(scope="session")
def long_path(poisson_geometric):
    arrival, service = poisson_geometric
    return simulate_discrete(arrival, service, SimConfig(n=200_000, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
