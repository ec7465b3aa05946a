"""Plug-in covariance kernel of the limiting Gaussian sequence and normal bands.

Long-run covariances of the centred departure series

    eta_i(k) = D(i) (1{Z(i) <= k} - H_hat(k)) / mean(D)

are estimated with a truncated or Bartlett-weighted lag window, then pushed
through the derivative of (c, H) -> G to give Cov(V_k, V_m).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import seeding
from .errors import AsymptoticsError
from .estimator import DifferenceSeq, compute_Z, estimate_c, estimate_H, valid_slice, x_cap_for
from .simulator import CountPaths

WEIGHTINGS = ("truncated", "bartlett")
PSD_SLACK = 1e-8


@dataclass
class EtaSeries:
    values: np.ndarray
    k: int
    mean_D: float
    valid_from: int


def default_lag(n: int) -> int:
    return int(math.floor(n ** (1.0 / 3.0) + 1e-9))


def lag_weights(L: int, weighting: str) -> np.ndarray:
    """Weights w_0..w_L; w_0 = 1."""
    if weighting not in WEIGHTINGS:
        raise AsymptoticsError(f"unknown weighting {weighting!r}")
    lags = np.arange(L + 1)
    if weighting == "bartlett":
        return 1.0 - lags / (L + 1.0)
    return np.ones(L + 1)


def eta_matrix(paths: CountPaths, z: DifferenceSeq, x_max: int) -> tuple[np.ndarray, float]:
    """Columns eta(1..x_max) over the valid slots, plus mean(D) over those slots."""
    h_hat = estimate_H(paths, z, x_max)
    d, zz = valid_slice(paths, z)
    mean_d = float(d.mean())
    ks = np.arange(1, x_max + 1)
    ind = (zz[:, None] <= ks[None, :]).astype(np.float64)
    return d[:, None] * (ind - h_hat[None, :]) / mean_d, mean_d


def eta_series(paths: CountPaths, z: DifferenceSeq, k: int) -> EtaSeries:
    e, mean_d = eta_matrix(paths, z, k)
    return EtaSeries(e[:, k - 1].copy(), k, mean_d, z.valid_from)


def _as_array(s) -> np.ndarray:
    return np.asarray(s.values if isinstance(s, EtaSeries) else s, dtype=np.float64)


def long_run_cov(a, b, L: int, weighting: str = "bartlett", one_sided: bool = False) -> float:
    """Weighted sum of empirical cross-covariances with 1/N normalization.

    gamma(l) = (1/N) sum_i (a_i - abar)(b_{i+l} - bbar). The two-sided form returns
    gamma(0) + sum_{l=1..L} w_l (gamma(l) + gamma(-l)); the one-sided form
    sum_{l=0..L} w_l gamma(l).
    """
    a = _as_array(a)
    b = _as_array(b)
    n = a.size
    if b.size != n:
        raise AsymptoticsError("series lengths differ")
    if L < 0 or L >= n:
        raise AsymptoticsError(f"lag L={L} must satisfy 0 <= L < series length {n}")
    w = lag_weights(L, weighting)
    a = a - a.mean()
    b = b - b.mean()
    total = w[0] * np.dot(a, b) / n
    for lag in range(1, L + 1):
        fwd = np.dot(a[: n - lag], b[lag:]) / n
        if one_sided:
            total += w[lag] * fwd
        else:
            total += w[lag] * (fwd + np.dot(a[lag:], b[: n - lag]) / n)
    return float(total)


def tau_hat(etas_k, etas_m, L: int, weighting: str = "bartlett") -> float:
    """Long-run covariance of the two eta series."""
    return long_run_cov(etas_k, etas_m, L, weighting)


def zero_indicator(paths: CountPaths, valid_from: int) -> np.ndarray:
    return (paths.arrivals[valid_from - 1:] == 0).astype(np.float64)


def tau1_hat(paths: CountPaths, etas_m: EtaSeries, L: int, weighting: str = "bartlett") -> float:
    """One-sided long-run covariance between 1{A(i) = 0} and eta_{i+l}(m), l = 0..L."""
    ind = zero_indicator(paths, etas_m.valid_from)
    return long_run_cov(ind, etas_m.values, L, weighting, one_sided=True)


def tau_matrix(e: np.ndarray, L: int, weighting: str = "bartlett") -> np.ndarray:
    """All-pairs version of :func:`tau_hat` for the columns of ``e``."""
    n = e.shape[0]
    if L < 0 or L >= n:
        raise AsymptoticsError(f"lag L={L} must satisfy 0 <= L < series length {n}")
    w = lag_weights(L, weighting)
    ec = e - e.mean(axis=0)
    out = w[0] * (ec.T @ ec) / n
    for lag in range(1, L + 1):
        g = ec[: n - lag].T @ ec[lag:] / n
        out += w[lag] * (g + g.T)
    return 0.5 * (out + out.T)


def tau1_vector(ind: np.ndarray, e: np.ndarray, L: int, weighting: str = "bartlett") -> np.ndarray:
    n = e.shape[0]
    if L < 0 or L >= n:
        raise AsymptoticsError(f"lag L={L} must satisfy 0 <= L < series length {n}")
    w = lag_weights(L, weighting)
    a = ind - ind.mean()
    ec = e - e.mean(axis=0)
    out = np.zeros(e.shape[1])
    for lag in range(L + 1):
        out += w[lag] * (a[: n - lag] @ ec[lag:]) / n
    return out


def v_kernel(tau: np.ndarray, tau1: np.ndarray, c_hat: float, h_hat) -> np.ndarray:
    """Covariance of the limit of sqrt(n)(G_hat - G) from plug-in ingredients.

    With W_0 the limit of sqrt(n)(c_hat - c) and W_k that of sqrt(n)(H_hat(k) - H(k)),
    V_k = W_k / c^k + k (1 - H(k)) W_0 / c^(k+1), so

        E[V_k V_m] = tau_km / c^(k+m)
                     + k m (1-H(k)) (1-H(m)) (1-c) / c^(k+m+1)
                     + k (1-H(k)) tau1_m / c^(k+m+1)
                     + m (1-H(m)) tau1_k / c^(k+m+1).

    Entries whose scale factor underflows are NaN.
    """
    if not 0.0 < c_hat < 1.0:
        raise AsymptoticsError("degenerate arrival-zero frequency")
    tau = np.asarray(tau, dtype=np.float64)
    tau1 = np.asarray(tau1, dtype=np.float64)
    K = tau.shape[0]
    if tau.shape != (K, K) or tau1.shape != (K,):
        raise AsymptoticsError("tau must be KxK and tau1 of length K")
    tail = 1.0 - np.asarray(h_hat, dtype=np.float64)[:K]
    if tail.size != K:
        raise AsymptoticsError("h_hat shorter than kernel dimension")
    k = np.arange(1, K + 1, dtype=np.float64)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        scale = c_hat ** (k[:, None] + k[None, :] + 1.0)
        kt = k * tail
        out = (
            tau * c_hat / scale
            + np.outer(kt, kt) * (1.0 - c_hat) / scale
            + (np.outer(kt, tau1) + np.outer(tau1, kt)) / scale
        )
        out[(scale == 0) | ~np.isfinite(out)] = np.nan
    return 0.5 * (out + out.T)


@dataclass
class KernelSet:
    tau: np.ndarray
    tau1: np.ndarray
    c_var: float
    v_kernel: np.ndarray
    lag_L: int
    weighting: str
    c_hat: float
    h_hat: np.ndarray
    n_used: int
    warnings: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.tau.shape[0]

    def to_dict(self) -> dict:
        def mat(m):
            return {
                "rows": int(m.shape[0]),
                "cols": int(m.shape[1]),
                "data": [None if not np.isfinite(v) else float(v) for v in m.ravel()],
            }

        return {
            "dim": self.dim,
            "lag_L": self.lag_L,
            "weighting": self.weighting,
            "c_hat": self.c_hat,
            "c_var": self.c_var,
            "n_used": self.n_used,
            "tau": mat(self.tau),
            "tau1": self.tau1.tolist(),
            "v_kernel": mat(self.v_kernel),
            "warnings": list(self.warnings),
        }


def kernel(
    paths: CountPaths,
    x_max: int,
    L: int | None = None,
    weighting: str = "bartlett",
    z: DifferenceSeq | None = None,
) -> KernelSet:
    """Estimate tau, tau1 and the G-kernel on x = 1..min(x_max, x_cap)."""
    if z is None:
        z = compute_Z(paths)
    c_hat = estimate_c(paths)
    if not 0.0 < c_hat < 1.0:
        raise AsymptoticsError("degenerate arrival-zero frequency")
    warnings = []
    dim = min(x_max, x_cap_for(c_hat))
    if dim < x_max:
        warnings.append(f"x-cap: kernel truncated at x={dim}")
    e, _ = eta_matrix(paths, z, dim)
    n_used = e.shape[0]
    if L is None:
        L = default_lag(n_used)
    tau = tau_matrix(e, L, weighting)
    tau1 = tau1_vector(zero_indicator(paths, z.valid_from), e, L, weighting)
    h_hat = estimate_H(paths, z, dim)
    vk = v_kernel(tau, tau1, c_hat, h_hat)
    if np.any(np.isnan(vk)):
        warnings.append("kernel entries flagged not-a-value (scale underflow)")
    return KernelSet(tau, tau1, c_hat * (1.0 - c_hat), vk, int(L), weighting, c_hat, h_hat, n_used, warnings)


class Band(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray
    half_width: np.ndarray
    critical: float
    warnings: list


def normal_band(
    g_raw,
    vk: np.ndarray,
    n: int,
    level: float,
    mode: str = "pointwise",
    seed: int = 0,
    draws: int = 2000,
) -> Band:
    """Normal-theory intervals for G.

    Pointwise: G_hat(x) +/- z sqrt(vk_xx / n). Uniform: the critical value is the
    ``level`` quantile of max_x |V_x| / sd_x over Gaussian draws from ``vk``,
    never smaller than the pointwise z, so the band contains the pointwise one.
    Entries with a flagged (NaN) variance get NaN bounds.
    """
    if not 0.0 < level < 1.0:
        raise AsymptoticsError("level must lie in (0, 1)")
    if mode not in ("pointwise", "uniform"):
        raise AsymptoticsError(f"unknown band mode {mode!r}")
    g = np.asarray(g_raw, dtype=np.float64)
    K = min(g.size, vk.shape[0])
    g = g[:K]
    var = np.diag(vk)[:K].copy()
    flagged = ~np.isfinite(var)
    warnings = []
    if np.any(flagged):
        warnings.append(
            "interval omitted at x=" + ",".join(str(i + 1) for i in np.flatnonzero(flagged))
        )
    if np.any(var[~flagged] < -PSD_SLACK):
        raise AsymptoticsError("kernel diagonal is negative beyond numerical slack")
    var[~flagged] = np.maximum(var[~flagged], 0.0)
    sd = np.sqrt(var)
    zq = float(stats.norm.ppf(0.5 * (1.0 + level)))
    crit = zq
    if mode == "uniform":
        idx = np.flatnonzero(~flagged & (sd > 0))
        if idx.size:
            sub = vk[np.ix_(idx, idx)]
            sub = 0.5 * (sub + sub.T)
            evals, evecs = np.linalg.eigh(sub)
            root = evecs * np.sqrt(np.clip(evals, 0.0, None))
            rng = seeding.rng_for(seed, seeding.BANDS)
            sims = rng.standard_normal((draws, idx.size)) @ root.T
            stat = np.max(np.abs(sims) / sd[idx], axis=1)
            crit = max(zq, float(np.quantile(stat, level)))
    half = crit * sd / math.sqrt(n)
    return Band(g - half, g + half, half, crit, warnings)
