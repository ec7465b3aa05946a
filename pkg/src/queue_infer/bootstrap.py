"""Moving-block bootstrap for H_hat and G_hat.

Rows (D(i), D(i) 1{Z(i) <= x} for every x) are resampled together in blocks of
length b, so numerator and denominator of H_hat stay paired within a block.
c_hat is taken from the full original sample and held fixed across replicates.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import seeding
from .distributions import DiscretePMF
from .errors import BootstrapError
from .estimator import DifferenceSeq, compute_Z, estimate_c, h_from_g, valid_slice, x_cap_for
from .simulator import CountPaths, SimConfig, simulate_discrete

MAX_REDRAWS = 100
BLOCK_EXPONENT = 1.0 / 3.0  # strictly inside (0, 2/5)


@dataclass(frozen=True)
class BlockConfig:
    b: Optional[int] = None
    B: int = 500
    seed: int = 0
    rule: str = "n_cbrt"

    def __post_init__(self):
        if self.rule not in ("explicit", "n_cbrt"):
            raise BootstrapError(f"unknown block rule {self.rule!r}")
        if self.rule == "explicit" and self.b is None:
            raise BootstrapError("explicit rule needs a block length b")
        if self.B < 1:
            raise BootstrapError("B must be >= 1")

    def block_length(self, n: int) -> int:
        if self.rule == "n_cbrt":
            return max(2, round(n**BLOCK_EXPONENT))
        return int(self.b)


def mbb_indices(n_used: int, b: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """k i.i.d. uniform block starts on {1, ..., n_used - b + 1} (1-based)."""
    if b < 1 or b > n_used:
        raise BootstrapError(f"block length b={b} must lie in [1, {n_used}]")
    return rng.integers(1, n_used - b + 2, size=k)


@dataclass
class BootstrapResult:
    h_star: np.ndarray
    g_star: np.ndarray
    ci_h: np.ndarray  # (x, 2)
    ci_g: np.ndarray
    h_hat: np.ndarray
    g_hat: np.ndarray
    c_hat: float
    b_used: int
    k_used: int
    n_used: int
    level: float
    ci_kind: str
    redraws: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "b_used": self.b_used,
            "k_used": self.k_used,
            "n_used": self.n_used,
            "B": int(self.h_star.shape[0]),
            "level": self.level,
            "ci_kind": self.ci_kind,
            "c_hat": self.c_hat,
            "h_hat": self.h_hat.tolist(),
            "g_hat": self.g_hat.tolist(),
            "ci_h": self.ci_h.tolist(),
            "ci_g": self.ci_g.tolist(),
            "h_star_sd": self.h_star.std(axis=0).tolist(),
            "g_star_sd": self.g_star.std(axis=0).tolist(),
            "redraws": self.redraws,
            "warnings": list(self.warnings),
        }


def _intervals(reps: np.ndarray, point: np.ndarray, level: float, kind: str) -> np.ndarray:
    alpha = 1.0 - level
    lo, hi = np.quantile(reps, [alpha / 2, 1 - alpha / 2], axis=0)
    if kind == "percentile":
        return np.column_stack([lo, hi])
    if kind == "basic":
        return np.column_stack([2 * point - hi, 2 * point - lo])
    raise BootstrapError(f"unknown CI kind {kind!r}")


def bootstrap_H(
    paths: CountPaths,
    z: DifferenceSeq,
    x_max: int,
    cfg: BlockConfig,
    level: float = 0.90,
    ci: str = "percentile",
) -> BootstrapResult:
    if not 0.0 < level < 1.0:
        raise BootstrapError("level must lie in (0, 1)")
    d, zz = valid_slice(paths, z)
    if d.sum() == 0:
        raise BootstrapError("no departures observed")
    n_valid = d.size
    b = cfg.block_length(n_valid)
    if b < 1 or b > n_valid:
        raise BootstrapError(f"block length b={b} must lie in [1, {n_valid}]")
    warnings = []
    if not 2 <= b <= n_valid / 2:
        warnings.append(f"block length b={b} outside [2, n/2]")
    k = n_valid // b
    n_used = k * b
    d = d[n_valid - n_used:]
    zz = zz[n_valid - n_used:]

    xs = np.arange(1, x_max + 1)
    num = d[:, None] * (zz[:, None] <= xs[None, :])
    cs_num = np.vstack([np.zeros((1, x_max), dtype=np.int64), np.cumsum(num, axis=0)])
    cs_d = np.concatenate([[0], np.cumsum(d)])
    del num

    c_hat = estimate_c(paths)
    h_star = np.empty((cfg.B, x_max))
    redraws = 0
    for r in range(cfg.B):
        rng = seeding.rng_for(cfg.seed, seeding.BOOTSTRAP, r)
        for _ in range(MAX_REDRAWS):
            starts = mbb_indices(n_used, b, k, rng) - 1
            den = int(np.sum(cs_d[starts + b] - cs_d[starts]))
            if den > 0:
                break
            redraws += 1
        else:
            raise BootstrapError("degenerate bootstrap replicate")
        h_star[r] = (cs_num[starts + b] - cs_num[starts]).sum(axis=0) / den
    if redraws:
        warnings.append(f"redrew {redraws} bootstrap replicates with zero departures")

    total_d = cs_d[-1]
    h_hat = cs_num[-1] / total_d
    g_dim = x_max
    if 0.0 < c_hat < 1.0:
        g_dim = min(x_max, x_cap_for(c_hat))
        if g_dim < x_max:
            warnings.append(f"x-cap: G replicates truncated at x={g_dim}")
        scale = c_hat ** (-xs[:g_dim].astype(np.float64))
        g_star = 1.0 - scale * (1.0 - h_star[:, :g_dim])
        g_hat = 1.0 - scale * (1.0 - h_hat[:g_dim])
    else:
        warnings.append("degenerate arrival-zero frequency; G replicates not computed")
        g_star = np.empty((cfg.B, 0))
        g_hat = np.empty(0)

    return BootstrapResult(
        h_star=h_star,
        g_star=g_star,
        ci_h=_intervals(h_star, h_hat, level, ci),
        ci_g=_intervals(g_star, g_hat, level, ci) if g_hat.size else np.empty((0, 2)),
        h_hat=h_hat,
        g_hat=g_hat,
        c_hat=c_hat,
        b_used=b,
        k_used=k,
        n_used=n_used,
        level=level,
        ci_kind=ci,
        redraws=redraws,
        warnings=warnings,
    )


def mbb_expectation(series: np.ndarray, b: int) -> float:
    """E* of the resampled mean: the average of all n - b + 1 block means."""
    series = np.asarray(series, dtype=np.float64)
    cs = np.concatenate([[0.0], np.cumsum(series)])
    block_means = (cs[b:] - cs[:-b]) / b
    return float(block_means.mean())


# -- coverage study ------------------------------------------------------------

def worker_count() -> int:
    env = os.environ.get("QUEUE_INFER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class CoverageReport:
    coverage: float
    covered: int
    reps: int
    true_h: float
    x: int
    level: float
    n: int
    b: int
    B: int
    intervals: list

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def _coverage_rep(args) -> tuple[float, float]:
    arrival, service, n, x, level, cfg, seed, r = args
    sim_seed = seeding.derived_seed(seed, seeding.replicate_stream(r), seeding.SIMULATION)
    boot_seed = seeding.derived_seed(seed, seeding.replicate_stream(r), seeding.BOOTSTRAP)
    paths = simulate_discrete(arrival, service, SimConfig(n=n, seed=sim_seed))
    z = compute_Z(paths)
    rep_cfg = BlockConfig(b=cfg.b, B=cfg.B, seed=boot_seed, rule=cfg.rule)
    res = bootstrap_H(paths, z, x, rep_cfg, level=level)
    lo, hi = res.ci_h[x - 1]
    return float(lo), float(hi)


def coverage_experiment(
    arrival: DiscretePMF,
    service: DiscretePMF,
    n: int,
    x: int,
    level: float,
    reps: int,
    cfg: BlockConfig,
    seed: int,
    workers: int | None = None,
) -> CoverageReport:
    """Fraction of percentile intervals for H(x) that cover the true value."""
    if reps < 1:
        raise BootstrapError("reps must be >= 1")
    true_h = float(h_from_g(service, arrival.zero_mass, x)[x - 1])
    jobs = [(arrival, service, n, x, level, cfg, seed, r) for r in range(reps)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=min(workers, reps)) as pool:
            intervals = list(pool.map(_coverage_rep, jobs, chunksize=max(1, reps // (4 * workers))))
    else:
        intervals = [_coverage_rep(j) for j in jobs]
    covered = sum(lo <= true_h <= hi for lo, hi in intervals)
    b_used = cfg.block_length(n)
    return CoverageReport(
        coverage=covered / reps,
        covered=int(covered),
        reps=reps,
        true_h=true_h,
        x=x,
        level=level,
        n=n,
        b=b_used,
        B=cfg.B,
        intervals=[list(iv) for iv in intervals],
    )
