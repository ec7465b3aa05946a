import math

import numpy as np
import pytest

from queue_infer import distributions as dist
from queue_infer.errors import SimulationError
from queue_infer.estimator import estimate, estimate_c
from queue_infer.simulator import (
    ContinuousTrace,
    SimConfig,
    default_burn_in,
    discretize,
    simulate_discrete,
    simulate_mg_inf_continuous,
)


@pytest.mark.parametrize("s", [1, 2, 5])
def test_point_mass_service_shifts_arrivals(s):
    paths = simulate_discrete(dist.poisson(1.2), dist.point(s), SimConfig(n=500, seed=4))
    assert np.array_equal(paths.departures[s:], paths.arrivals[:-s])


def test_point_mass_zero_arrivals_rejected():
    with pytest.raises(SimulationError):
        simulate_discrete(dist.point(0), dist.geometric(0.5), SimConfig(n=10))


def test_arrivals_every_slot_rejected():
    with pytest.raises(SimulationError):
        simulate_discrete(dist.point(2), dist.geometric(0.5), SimConfig(n=10))


def test_service_with_zero_mass_rejected():
    with pytest.raises(SimulationError):
        simulate_discrete(dist.poisson(1.0), dist.poisson(2.0), SimConfig(n=10))


def test_bad_config():
    with pytest.raises(SimulationError):
        SimConfig(n=0)
    with pytest.raises(SimulationError):
        SimConfig(n=5, burn_in=-1)


def test_wald_identity_single_run(poisson_geometric):
    arrival, service = poisson_geometric
    n = 10**5
    paths = simulate_discrete(arrival, service, SimConfig(n=n, burn_in=200, seed=21))
    bound = 3 * math.sqrt(2 * 2.0 / n)  # E[A^2] = 2 for Poisson(1)
    assert abs(paths.departures.mean() - paths.arrivals.mean()) <= bound


def test_conservation_accounting(poisson_geometric):
    arrival, service = poisson_geometric
    paths = simulate_discrete(arrival, service, SimConfig(n=3000, burn_in=40, seed=2))
    m = paths.meta
    assert m["burn_in"] == 40
    assert paths.departures.sum() == m["customers_total"] - m["departed_before_window"] - m["in_service_at_end"]


def test_deterministic_replay(poisson_geometric):
    arrival, service = poisson_geometric
    a = simulate_discrete(arrival, service, SimConfig(n=1000, seed=77))
    b = simulate_discrete(arrival, service, SimConfig(n=1000, seed=77))
    c = simulate_discrete(arrival, service, SimConfig(n=1000, seed=78))
    assert np.array_equal(a.arrivals, b.arrivals) and np.array_equal(a.departures, b.departures)
    assert not np.array_equal(a.arrivals, c.arrivals)


def test_default_burn_in():
    # 0.5^19 > 1e-6 > 0.5^20
    assert default_burn_in(dist.geometric(0.5)) == 20
    assert default_burn_in(dist.point(3)) == 3


def test_empty_continuous_trace():
    trace = simulate_mg_inf_continuous(1.0, dist.Exponential(1.0), 1e-9, seed=0)
    assert trace.arrival_times.size == 0 and trace.departure_times.size == 0


def test_continuous_arrival_count():
    horizon = 1e5
    trace = simulate_mg_inf_continuous(1.0, dist.Exponential(1.0), horizon, seed=5)
    assert abs(trace.arrival_times.size - horizon) <= 3 * math.sqrt(horizon)
    assert trace.departure_times.size + trace.dropped_departures == trace.arrival_times.size


def test_deterministic_continuous_service():
    trace = simulate_mg_inf_continuous(2.0, dist.Deterministic(0.7), 100.0, seed=1)
    kept = trace.arrival_times[trace.arrival_times + 0.7 <= 100.0]
    np.testing.assert_allclose(trace.departure_times, kept + 0.7, rtol=0, atol=1e-12)


def test_discretize_first_bin():
    paths = discretize(ContinuousTrace(np.array([0.05]), np.array([]), 1.0), 0.1)
    assert paths.arrivals.tolist() == [1] + [0] * 9


def test_discretize_half_open_boundary():
    paths = discretize(ContinuousTrace(np.array([0.5]), np.array([]), 1.0), 0.5)
    assert paths.arrivals.tolist() == [0, 1]


def test_discretize_preserves_arrival_count():
    trace = simulate_mg_inf_continuous(3.0, dist.Exponential(0.5), 500.0, seed=9)
    paths = discretize(trace, 0.25)
    assert paths.arrivals.sum() == trace.arrival_times.size
    assert paths.departures.sum() == trace.departure_times.size


def test_discretized_poisson_counts():
    trace = simulate_mg_inf_continuous(1.0, dist.Exponential(1.0), 1e5, seed=3)
    paths = discretize(trace, 0.1)
    n = paths.n
    c = math.exp(-0.1)
    assert abs(paths.arrivals.mean() - 0.1) <= 3 * math.sqrt(0.1 / n)
    assert abs(estimate_c(paths) - c) <= 3 * math.sqrt(c * (1 - c) / n)


def test_discretized_estimator_limit():
    # A departure is matched to its own arrival only if it leaves in a later bin.
    # With arrival offset U ~ Unif[0, h) and exponential(1) service, the
    # bin gap K = floor((U + S) / h) has P(1 <= K <= x) = (1 - e^-h)/h * (1 - e^-hx),
    # which is the limit of G_hat for the discretized process.
    h = 0.1
    trace = simulate_mg_inf_continuous(1.0, dist.Exponential(1.0), 2e5, seed=17)
    est = estimate(discretize(trace, h), 30)
    x = np.arange(1, 31)
    limit = (1 - math.exp(-h)) / h * (1 - np.exp(-h * x))
    assert np.max(np.abs(est.g_hat_raw - limit)) <= 0.02
