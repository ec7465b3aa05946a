"""Monte Carlo validation presets.

Each ``criterion_*`` function runs one check at its fixed tolerance and returns a
:class:`CriterionResult`. The CLI ``mc-validate`` command and the acceptance test
module share these presets.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import seeding
from .asymptotics import kernel, lag_weights, eta_series, tau1_hat, tau_hat
from .bootstrap import BlockConfig, coverage_experiment, mbb_expectation, mbb_indices
from .distributions import Exponential, geometric, poisson
from .estimator import compute_Z, estimate, estimate_c, estimate_G, estimate_H, h_from_g
from .simulator import CountPaths, SimConfig, discretize, simulate_discrete, simulate_mg_inf_continuous


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.id}: {self.name} -- {self.detail} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "passed": bool(self.passed),
            "detail": self.detail,
            "metrics": self.metrics,
            "seconds": round(self.seconds, 3),
        }


def _random_paths(rng: np.random.Generator, n_lo: int, n_hi: int) -> CountPaths:
    """Small synthetic path with at least one arrival-free slot, one arrival slot
    and a departure after the first arrival."""
    while True:
        n = int(rng.integers(n_lo, n_hi + 1))
        lam = rng.uniform(0.1, 2.5)
        a = rng.poisson(lam, n)
        d = rng.poisson(rng.uniform(0.2, 2.5), n)
        if not (0 < np.mean(a == 0) < 1) or not np.any(a[:-1] > 0):
            continue
        first = int(np.argmax(a > 0))
        if d[first + 1:].sum() == 0:
            continue
        return CountPaths(a, d)


# -- brute-force oracles ---------------------------------------------------------

def naive_eta(paths: CountPaths, k: int) -> tuple[list[float], int]:
    """eta(k) by explicit loops: Z by backward scan, H_hat by direct summation."""
    a = paths.arrivals.tolist()
    d = paths.departures.tolist()
    n = len(a)
    z = {}
    for t in range(n):
        for s in range(t - 1, -1, -1):
            if a[s] > 0:
                z[t] = t - s
                break
    valid = sorted(z)
    num = sum(d[t] for t in valid if z[t] <= k)
    den = sum(d[t] for t in valid)
    h = num / den
    mean_d = den / len(valid)
    return [d[t] * ((1.0 if z[t] <= k else 0.0) - h) / mean_d for t in valid], valid[0] + 1


def naive_tau(x: list[float], y: list[float], L: int, weighting: str) -> float:
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    w = lag_weights(L, weighting)
    total = 0.0
    for i in range(n):
        for j in range(n):
            lag = abs(j - i)
            if lag <= L:
                total += w[lag] * (x[i] - mx) * (y[j] - my)
    return total / n


def naive_tau1(ind: list[float], eta: list[float], L: int, weighting: str) -> float:
    n = len(eta)
    mi, me = sum(ind) / n, sum(eta) / n
    w = lag_weights(L, weighting)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if 0 <= j - i <= L:
                total += w[j - i] * (ind[i] - mi) * (eta[j] - me)
    return total / n


# -- criteria ------------------------------------------------------------------

def criterion_1_roundtrip(seed: int = 1, instances: int = 1000, tol: float = 1e-12) -> CriterionResult:
    rng = seeding.rng_for(seed, 1)
    worst = 0.0
    for _ in range(instances):
        paths = _random_paths(rng, 10, 300)
        z = compute_Z(paths)
        c_hat = estimate_c(paths)
        x_max = int(rng.integers(1, 40))
        h = estimate_H(paths, z, x_max)
        g = estimate_G(h, c_hat, x_max)
        back = h_from_g(g.raw, c_hat, g.raw.size)
        worst = max(worst, float(np.max(np.abs(back - h[: g.raw.size]), initial=0.0)))
    return CriterionResult(
        1, "exact algebraic roundtrip", worst <= tol,
        f"max |h_from_g(G_raw) - H_hat| = {worst:.2e} over {instances} instances (tol {tol:g})",
        {"max_abs_err": worst},
    )


def criterion_2_consistency(seed: int = 2, runs: int = 20, n: int = 200_000, tol: float = 0.02,
                            need: int = 18) -> CriterionResult:
    arrival, service = poisson(1.0), geometric(0.5)
    x = np.arange(1, 11)
    g_true = 1.0 - 0.5**x
    errs = []
    for r in range(runs):
        paths = simulate_discrete(arrival, service, SimConfig(n=n, seed=seeding.derived_seed(seed, r)))
        est = estimate(paths, 10)
        errs.append(float(np.max(np.abs(est.g_hat_raw[:10] - g_true))))
    ok = sum(e <= tol for e in errs)
    return CriterionResult(
        2, "consistency of G_hat", ok >= need,
        f"{ok}/{runs} runs with sup_(x<=10)|G_hat - G| <= {tol} (need {need}); worst {max(errs):.4f}",
        {"sup_errors": errs, "passing_runs": ok},
    )


def criterion_3_clt(seed: int = 3, reps: int = 400, n: int = 20_000, n_kernel: int = 10**6,
                    x: int = 2, alpha: float = 0.01, rel_tol: float = 0.20) -> CriterionResult:
    arrival, service = poisson(1.0), geometric(0.5)
    c = math.exp(-1.0)
    h_true = float(h_from_g(service, c, x)[x - 1])
    big = simulate_discrete(arrival, service, SimConfig(n=n_kernel, seed=seeding.derived_seed(seed, 0)))
    lag = round(n_kernel ** (1.0 / 3.0))
    ks = kernel(big, x, L=lag, weighting="bartlett")
    var_pred = float(ks.tau[x - 1, x - 1])
    vals = np.empty(reps)
    for r in range(reps):
        paths = simulate_discrete(
            arrival, service, SimConfig(n=n, seed=seeding.derived_seed(seed, seeding.replicate_stream(r)))
        )
        h = estimate_H(paths, compute_Z(paths), x)
        vals[r] = math.sqrt(n) * (h[x - 1] - h_true)
    ks_stat, p_value = stats.kstest(vals, "norm", args=(0.0, math.sqrt(var_pred)))
    var_emp = float(vals.var(ddof=1))
    ratio = var_emp / var_pred
    passed = p_value >= alpha and abs(ratio - 1.0) <= rel_tol
    return CriterionResult(
        3, "CLT scale for H_hat(2)", passed,
        f"KS p={p_value:.3f} (alpha {alpha}), var ratio {ratio:.3f} (tol +/-{rel_tol:.0%})",
        {"ks_p": float(p_value), "ks_stat": float(ks_stat), "var_emp": var_emp, "var_pred": var_pred,
         "ratio": ratio, "lag": lag},
    )


def criterion_4_kernel_identity(seed: int = 4, paths_count: int = 200, tol: float = 1e-12) -> CriterionResult:
    rng = seeding.rng_for(seed, 1)
    worst = 0.0
    for _ in range(paths_count):
        paths = _random_paths(rng, 2, 500)
        c_hat = estimate_c(paths)
        ind = (paths.arrivals == 0).astype(np.float64)
        worst = max(worst, abs(c_hat * (1 - c_hat) - float(ind.var())))
    return CriterionResult(
        4, "c(1-c) equals zero-indicator variance", worst <= tol,
        f"max deviation {worst:.2e} over {paths_count} paths (tol {tol:g})",
        {"max_abs_err": worst},
    )


def criterion_5_small_oracle(seed: int = 5, paths_count: int = 200, tol: float = 1e-12) -> CriterionResult:
    rng = seeding.rng_for(seed, 1)
    worst = 0.0
    for _ in range(paths_count):
        while True:
            paths = _random_paths(rng, 6, 50)
            z = compute_Z(paths)
            n_valid = paths.n - z.valid_from + 1
            if n_valid >= 5:
                break
        L = int(rng.integers(0, min(3, n_valid - 1) + 1))
        weighting = "bartlett" if rng.random() < 0.5 else "truncated"
        k = int(rng.integers(1, 6))
        m = int(rng.integers(1, 6))
        ek, em = eta_series(paths, z, k), eta_series(paths, z, m)
        nk, start = naive_eta(paths, k)
        nm, _ = naive_eta(paths, m)
        ind = [1.0 if v == 0 else 0.0 for v in paths.arrivals.tolist()[start - 1:]]
        worst = max(
            worst,
            float(np.max(np.abs(ek.values - np.array(nk)))),
            abs(tau_hat(ek, em, L, weighting) - naive_tau(nk, nm, L, weighting)),
            abs(tau1_hat(paths, em, L, weighting) - naive_tau1(ind, nm, L, weighting)),
        )
    return CriterionResult(
        5, "small-instance oracle equivalence", worst <= tol,
        f"max |fast - double loop| = {worst:.2e} over {paths_count} paths (tol {tol:g})",
        {"max_abs_err": worst},
    )


def criterion_6_coverage(seed: int = 6, reps: int = 200, n: int = 10_000, B: int = 500, x: int = 2,
                         level: float = 0.90, band: tuple = (0.85, 0.95),
                         workers: int | None = None) -> CriterionResult:
    b = round(n ** (1.0 / 3.0))
    report = coverage_experiment(
        poisson(1.0), geometric(0.5), n, x, level, reps,
        BlockConfig(b=b, B=B, seed=0, rule="explicit"), seed, workers=workers,
    )
    passed = band[0] <= report.coverage <= band[1]
    return CriterionResult(
        6, "MBB percentile coverage for H(2)", passed,
        f"coverage {report.coverage:.3f} ({report.covered}/{reps}), b={b}, B={B}, target [{band[0]}, {band[1]}]",
        {"coverage": report.coverage, "b": b},
    )


def criterion_7_discretization(seed: int = 7, lam: float = 1.0, h: float = 0.1, horizon: float = 2e5,
                               x_max: int = 30, tol: float = 0.02) -> CriterionResult:
    trace = simulate_mg_inf_continuous(lam, Exponential(1.0), horizon, seed)
    paths = discretize(trace, h)
    est = estimate(paths, x_max)
    c_true = math.exp(-lam * h)
    se = math.sqrt(c_true * (1 - c_true) / paths.n)
    c_ok = abs(est.c_hat - c_true) <= 3 * se
    x = np.arange(1, x_max + 1)
    g_discr = 1.0 - np.exp(-h * x)
    sup_err = float(np.max(np.abs(est.g_hat_raw[:x_max] - g_discr)))
    return CriterionResult(
        7, "discretized M/G/inf fidelity", c_ok and sup_err <= tol,
        f"|c_hat - e^-0.1| = {abs(est.c_hat - c_true):.2e} (3se {3 * se:.2e}); "
        f"sup_(x<=30)|G_hat - (1 - e^-0.1x)| = {sup_err:.4f} (tol {tol})",
        {"c_hat": est.c_hat, "c_err": abs(est.c_hat - c_true), "sup_err": sup_err},
    )


def criterion_8_wald(seed: int = 8, runs: int = 20, n: int = 100_000, burn_in: int = 200,
                     need: int = 19) -> CriterionResult:
    arrival, service = poisson(1.0), geometric(0.5)
    bound = 3 * math.sqrt(2 * arrival.second_moment() / n)
    gaps = []
    for r in range(runs):
        paths = simulate_discrete(arrival, service, SimConfig(n=n, burn_in=burn_in, seed=seeding.derived_seed(seed, r)))
        gaps.append(abs(float(paths.departures.mean() - paths.arrivals.mean())))
    ok = sum(g <= bound for g in gaps)
    return CriterionResult(
        8, "Wald identity mean(D) = mean(A)", ok >= need,
        f"{ok}/{runs} runs within {bound:.4f} (need {need})",
        {"gaps": gaps, "bound": bound},
    )


def criterion_9_mbb_expectation(seed: int = 9, replicates: int = 100_000,
                                cases: tuple = ((200, 10), (200, 2), (150, 7), (60, 5), (37, 3))) -> CriterionResult:
    rng = seeding.rng_for(seed, 1)
    worst_z = 0.0
    for n_used, b in cases:
        series = rng.poisson(1.5, n_used) * rng.integers(0, 2, n_used)
        k = n_used // b
        n_used_eff = k * b
        series = series[:n_used_eff].astype(np.float64)
        analytic = mbb_expectation(series, b)
        cs = np.concatenate([[0.0], np.cumsum(series)])
        starts = mbb_indices(n_used_eff, b, k * replicates, rng).reshape(replicates, k) - 1
        means = ((cs[starts + b] - cs[starts]) / b).mean(axis=1)
        se = means.std(ddof=1) / math.sqrt(replicates)
        worst_z = max(worst_z, abs(means.mean() - analytic) / se if se > 0 else 0.0)
    return CriterionResult(
        9, "MBB expectation identity", worst_z <= 3.0,
        f"max |empirical - analytic| / MC se = {worst_z:.2f} over {len(cases)} (n_used, b) cases (tol 3)",
        {"max_z": worst_z},
    )


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1_roundtrip,
    2: criterion_2_consistency,
    3: criterion_3_clt,
    4: criterion_4_kernel_identity,
    5: criterion_5_small_oracle,
    6: criterion_6_coverage,
    7: criterion_7_discretization,
    8: criterion_8_wald,
    9: criterion_9_mbb_expectation,
}


def run_criteria(ids=None, overrides: dict | None = None) -> list[CriterionResult]:
    """Run the selected presets; ``overrides`` maps a criterion id to keyword arguments."""
    overrides = overrides or {}
    results = []
    for cid in ids or sorted(CRITERIA):
        kwargs = overrides.get(cid, {})
        start = time.perf_counter()
        res = CRITERIA[cid](**kwargs)
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
