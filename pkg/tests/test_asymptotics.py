import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from queue_infer import distributions as dist
from queue_infer.asymptotics import (
    eta_matrix,
    eta_series,
    kernel,
    long_run_cov,
    normal_band,
    tau1_hat,
    tau1_vector,
    tau_hat,
    tau_matrix,
    v_kernel,
    zero_indicator,
)
from queue_infer.errors import AsymptoticsError
from queue_infer.estimator import compute_Z, estimate, estimate_c, estimate_H
from queue_infer.simulator import CountPaths, SimConfig, simulate_discrete
from queue_infer.validation import naive_eta, naive_tau, naive_tau1


@pytest.fixture(scope="module")
def mid_path():
    return simulate_discrete(dist.poisson(1.0), dist.geometric(0.5), SimConfig(n=20_000, seed=5))


def test_eta_zero_where_no_departures(mid_path):
    z = compute_Z(mid_path)
    eta = eta_series(mid_path, z, 2)
    d = mid_path.departures[z.valid_from - 1:]
    assert np.all(eta.values[d == 0] == 0)


@pytest.mark.parametrize("k", [1, 2, 4, 7])
def test_eta_centering(mid_path, k):
    eta = eta_series(mid_path, compute_Z(mid_path), k)
    assert abs(eta.values.sum()) <= 1e-10 * eta.values.size


def test_eta_vanishes_beyond_largest_gap(mid_path):
    z = compute_Z(mid_path)
    zmax = int(z.valid[mid_path.departures[z.valid_from - 1:] > 0].max())
    assert np.all(eta_series(mid_path, z, zmax).values == 0)


def test_eta_matches_brute_force():
    paths = CountPaths([0, 2, 0, 0, 1, 0, 3, 0, 0, 0], [1, 0, 1, 2, 0, 1, 1, 2, 0, 1])
    z = compute_Z(paths)
    for k in (1, 2, 3):
        brute, start = naive_eta(paths, k)
        assert start == z.valid_from
        np.testing.assert_allclose(eta_series(paths, z, k).values, brute, atol=1e-15)


def test_tau_zero_series():
    zero = np.zeros(30)
    assert tau_hat(zero, zero, 4, "bartlett") == 0.0


def test_tau_lag_zero_is_population_variance(rng):
    x = rng.normal(size=200)
    assert tau_hat(x, x, 0) == pytest.approx(x.var(ddof=0), rel=1e-13)


def test_tau_lag_too_large():
    with pytest.raises(AsymptoticsError):
        tau_hat(np.ones(5), np.ones(5), 5)


def test_unit_service_collapses_tau():
    paths = simulate_discrete(dist.poisson(1.0), dist.point(1), SimConfig(n=300, seed=2))
    z = compute_Z(paths)
    eta = eta_series(paths, z, 1)
    brute, _ = naive_eta(paths, 1)
    assert np.all(eta.values == 0) and all(v == 0 for v in brute)
    assert tau_hat(eta, eta, 6) == 0.0


@pytest.mark.parametrize("weighting", ["truncated", "bartlett"])
def test_tau_hat_double_loop(rng, weighting):
    for _ in range(20):
        a = rng.normal(size=40)
        b = rng.normal(size=40) + 0.3 * a
        L = int(rng.integers(0, 4))
        assert tau_hat(a, b, L, weighting) == pytest.approx(naive_tau(list(a), list(b), L, weighting), abs=1e-12)


def test_tau1_constant_indicator():
    # arrivals in every slot: the zero-arrival indicator is constant
    paths = CountPaths([1, 2, 1, 1, 3, 1, 2, 1], [0, 1, 2, 0, 1, 1, 0, 2])
    eta = eta_series(paths, compute_Z(paths), 1)
    assert tau1_hat(paths, eta, 2) == 0.0


def test_tau1_beyond_largest_gap(mid_path):
    z = compute_Z(mid_path)
    eta = eta_series(mid_path, z, 40)
    assert tau1_hat(mid_path, eta, 5) == 0.0


def test_tau1_double_loop_small_path():
    paths = CountPaths([0, 1, 0, 0, 2, 0, 1, 0, 0, 0, 1, 0], [0, 0, 1, 1, 0, 2, 0, 1, 0, 1, 0, 1])
    z = compute_Z(paths)
    eta = eta_series(paths, z, 2)
    brute, start = naive_eta(paths, 2)
    ind = [1.0 if a == 0 else 0.0 for a in paths.arrivals.tolist()[start - 1:]]
    assert tau1_hat(paths, eta, 2, "truncated") == pytest.approx(naive_tau1(ind, brute, 2, "truncated"), abs=1e-12)


def test_matrix_forms_agree_with_scalar(mid_path):
    z = compute_Z(mid_path)
    e, _ = eta_matrix(mid_path, z, 4)
    tau = tau_matrix(e, 7)
    t1 = tau1_vector(zero_indicator(mid_path, z.valid_from), e, 7)
    for k in range(4):
        ek = eta_series(mid_path, z, k + 1)
        assert t1[k] == pytest.approx(tau1_hat(mid_path, ek, 7), abs=1e-12)
        for m in range(4):
            em = eta_series(mid_path, z, m + 1)
            assert tau[k, m] == pytest.approx(tau_hat(ek, em, 7), abs=1e-12)


def test_bartlett_tau_is_psd(mid_path):
    z = compute_Z(mid_path)
    e, _ = eta_matrix(mid_path, z, 8)
    tau = tau_matrix(e, 27, "bartlett")
    assert np.array_equal(tau, tau.T)
    assert np.linalg.eigvalsh(tau).min() >= -1e-8


def test_lrv_bilinearity(mid_path):
    # tau_kk mean(D)^2 expands into long-run (co)variances of D 1{Z<=k} and D
    z = compute_Z(mid_path)
    d = mid_path.departures[z.valid_from - 1:].astype(float)
    k, L = 2, 20
    ind = (z.valid <= k).astype(float)
    h = estimate_H(mid_path, z, k)[k - 1]
    sigma_k = long_run_cov(d * ind, d * ind, L)
    sigma = long_run_cov(d, d, L)
    cross = long_run_cov(d * ind, d, L)
    eta = eta_series(mid_path, z, k)
    lhs = tau_hat(eta, eta, L) * d.mean() ** 2
    assert lhs == pytest.approx(sigma_k - 2 * h * cross + h * h * sigma, rel=1e-10)


def test_departure_long_run_variance(long_path):
    # Poisson arrivals thinned by i.i.d. service give i.i.d. Poisson(1) departures
    d = long_path.departures.astype(float)
    assert long_run_cov(d, d, 58) == pytest.approx(1.0, abs=0.05)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=300))
def test_c_variance_identity(a):
    paths = CountPaths(a, [0] * len(a))
    c = estimate_c(paths)
    ind = (np.asarray(a) == 0).astype(float)
    assert abs(c * (1 - c) - ind.var()) <= 1e-12


class TestVKernel:
    def test_pure_c_term(self):
        out = v_kernel(np.zeros((1, 1)), np.zeros(1), 0.5, np.array([0.75]))
        assert out[0, 0] == pytest.approx(0.25, abs=1e-15)

    def test_full_h_leaves_tau_term(self, rng):
        a = rng.normal(size=(4, 4))
        tau = a @ a.T
        c = 0.4
        out = v_kernel(tau, rng.normal(size=4), c, np.ones(4))
        k = np.arange(1, 5)
        np.testing.assert_allclose(out, tau / c ** (k[:, None] + k[None, :]), rtol=1e-13)

    def test_symmetric_and_diagonal_form(self, rng):
        a = rng.normal(size=(5, 5))
        tau = a @ a.T
        tau1 = rng.normal(size=5)
        h = np.sort(rng.uniform(0.5, 1, 5))
        c = 0.6
        out = v_kernel(tau, tau1, c, h)
        assert np.array_equal(out, out.T)
        for k in range(1, 6):
            t = 1 - h[k - 1]
            expected = (tau[k - 1, k - 1] / c ** (2 * k) + k * k * t * t * (1 - c) / c ** (2 * k + 1)
                        + 2 * k * t * tau1[k - 1] / c ** (2 * k + 1))
            assert out[k - 1, k - 1] == pytest.approx(expected, rel=1e-13)

    def test_underflow_flagged(self):
        out = v_kernel(np.ones((1, 1)) * 1e-300, np.zeros(1), 1e-200, np.array([0.5]))
        assert np.isnan(out[0, 0])

    def test_degenerate_c(self):
        with pytest.raises(AsymptoticsError):
            v_kernel(np.zeros((1, 1)), np.zeros(1), 1.0, np.ones(1))


def test_kernel_predicts_g_variance(poisson_geometric):
    # sqrt(n)(G_hat - G) across replicates vs. plug-in kernel from one long run
    arrival, service = poisson_geometric
    n, reps = 20_000, 200
    g_true = 1 - 0.5 ** np.arange(1, 3)
    vals = np.array([
        np.sqrt(n) * (estimate(simulate_discrete(arrival, service, SimConfig(n=n, seed=500 + r)), 2).g_hat_raw - g_true)
        for r in range(reps)
    ])
    big = simulate_discrete(arrival, service, SimConfig(n=500_000, seed=499))
    ks = kernel(big, 2)
    ratio = vals.var(axis=0, ddof=1) / np.diag(ks.v_kernel)
    assert np.all(np.abs(ratio - 1) <= 0.25), ratio


def test_kernel_set(mid_path):
    ks = kernel(mid_path, 6, weighting="bartlett")
    assert ks.lag_L == 27  # floor(19999^(1/3))
    assert np.array_equal(ks.v_kernel, ks.v_kernel.T)
    assert np.all(np.diag(ks.v_kernel) >= -1e-8)
    assert ks.c_var == pytest.approx(ks.c_hat * (1 - ks.c_hat))
    assert np.isfinite(np.trace(ks.tau))
    d = ks.to_dict()
    assert d["v_kernel"]["rows"] == 6 and len(d["v_kernel"]["data"]) == 36


class TestNormalBand:
    def test_zero_variance(self):
        band = normal_band(np.array([0.3, 0.6]), np.zeros((2, 2)), 100, 0.9)
        assert np.all(band.half_width == 0)

    def test_half_width(self):
        band = normal_band(np.array([0.5]), np.array([[0.25]]), 100, 0.95)
        assert band.half_width[0] == pytest.approx(0.098, abs=2e-4)

    def test_uniform_contains_pointwise(self, mid_path):
        est = estimate(mid_path, 6)
        ks = kernel(mid_path, 6)
        pw = normal_band(est.g_hat_raw, ks.v_kernel, mid_path.n, 0.9, "pointwise")
        un = normal_band(est.g_hat_raw, ks.v_kernel, mid_path.n, 0.9, "uniform", seed=3)
        assert np.all(un.lower <= pw.lower) and np.all(un.upper >= pw.upper)
        assert un.critical > pw.critical

    def test_uniform_is_seeded(self, mid_path):
        ks = kernel(mid_path, 4)
        g = np.linspace(0.5, 0.9, 4)
        a = normal_band(g, ks.v_kernel, 100, 0.9, "uniform", seed=8)
        b = normal_band(g, ks.v_kernel, 100, 0.9, "uniform", seed=8)
        assert a.critical == b.critical

    def test_flagged_entries_omitted(self):
        vk = np.array([[0.2, np.nan], [np.nan, np.nan]])
        band = normal_band(np.array([0.4, 0.8]), vk, 50, 0.9, "uniform")
        assert np.isfinite(band.lower[0]) and np.isnan(band.lower[1])
        assert band.warnings

    def test_bad_level(self):
        with pytest.raises(AsymptoticsError):
            normal_band(np.zeros(1), np.zeros((1, 1)), 10, 1.0)
