"""Discrete arrival and service laws on the nonnegative integers.

A :class:`DiscretePMF` stores its materialized support (``values``) and masses
(``probs``). Unbounded parametric families are truncated at the first point where
the remaining tail mass drops below ``TAIL_EPS``; sampling still uses the exact
numpy generator for the family, so truncation only affects ``cdf`` lookups past
the truncation point, where the tail is negligible anyway.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import DistributionError

TAIL_EPS = 1e-12
SUM_TOL = 1e-12

# Families with all moments finite. Used by the advisory tail check.
_LIGHT_TAILED = {"poisson", "geometric", "negbin", "point", "empirical"}


@dataclass(frozen=True)
class DiscretePMF:
    family: str
    params: tuple
    values: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if values.ndim != 1 or values.shape != probs.shape or values.size == 0:
            raise DistributionError("values and probs must be nonempty 1-D arrays of equal length")
        if np.any(values < 0):
            raise DistributionError("support must be nonnegative integers")
        if np.any(np.diff(values) <= 0):
            raise DistributionError("support must be strictly increasing")
        if np.any(probs < 0) or np.any(probs > 1):
            raise DistributionError("probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > SUM_TOL and self.family == "empirical":
            raise DistributionError(f"probabilities sum to {probs.sum()!r}, not 1")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def __str__(self) -> str:
        if self.family == "empirical":
            return "empirical"
        return f"{self.family}:" + ",".join(f"{p:g}" for p in self.params)

    @property
    def support_kind(self) -> str:
        return "starts-at-0" if self.mass(0) > 0 else "starts-at-1"

    @property
    def zero_mass(self) -> float:
        """P(X = 0); for an arrival law this is the no-arrival probability c."""
        return self.mass(0)

    @property
    def truncation(self) -> int:
        return int(self.values[-1])

    def mass(self, x: int) -> float:
        if x < 0:
            return 0.0
        if self.family == "geometric":
            (p,) = self.params
            return 0.0 if x == 0 else p * (1.0 - p) ** (x - 1)
        if self.family == "poisson":
            return float(stats.poisson.pmf(x, self.params[0]))
        if self.family == "negbin":
            r, p = self.params
            return float(stats.nbinom.pmf(x, r, p))
        idx = np.searchsorted(self.values, x)
        if idx < self.values.size and self.values[idx] == x:
            return float(self.probs[idx])
        return 0.0

    def cdf(self, x) -> np.ndarray | float:
        """G(x) = P(X <= x), vectorized over ``x``."""
        return 1.0 - self.sf(x)

    def sf(self, x) -> np.ndarray | float:
        """Survival 1 - G(x) = P(X > x), using closed forms where they exist."""
        xs = np.asarray(x, dtype=np.float64)
        if self.family == "geometric":
            (p,) = self.params
            out = np.where(xs < 1, 1.0, (1.0 - p) ** np.maximum(np.floor(xs), 0))
        elif self.family == "poisson":
            out = stats.poisson.sf(xs, self.params[0])
        elif self.family == "negbin":
            out = stats.nbinom.sf(xs, *self.params)
        else:
            tail = np.concatenate([np.cumsum(self.probs[::-1])[::-1], [0.0]])
            idx = np.searchsorted(self.values, np.floor(xs), side="right")
            out = tail[idx]
        out = np.clip(out, 0.0, 1.0)
        return float(out) if np.ndim(out) == 0 else out

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def second_moment(self) -> float:
        v = self.values.astype(np.float64)
        return float(np.dot(v * v, self.probs))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return sample(self, rng, count)


def pmf_cdf(d: DiscretePMF, x: int) -> tuple[float, float]:
    """Return ``(P(X = x), P(X <= x))``."""
    if x < 0:
        raise DistributionError("x must be nonnegative")
    return d.mass(x), float(d.cdf(x))


def sample(d: DiscretePMF, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. variates; deterministic given the generator state."""
    if count < 0:
        raise DistributionError("count must be nonnegative")
    if d.family == "poisson":
        return rng.poisson(d.params[0], count).astype(np.int64)
    if d.family == "geometric":
        return rng.geometric(d.params[0], count).astype(np.int64)
    if d.family == "negbin":
        r, p = d.params
        return rng.negative_binomial(r, p, count).astype(np.int64)
    if d.family == "point":
        return np.full(count, d.params[0], dtype=np.int64)
    # normalize once more so rng.choice does not trip on 1e-16 rounding
    p = d.probs / d.probs.sum()
    return rng.choice(d.values, size=count, p=p).astype(np.int64)


class TailCheck(NamedTuple):
    partial_sum: float
    satisfied_hint: bool


def tail_condition_check(service: DiscretePMF, horizon: int) -> TailCheck:
    """Partial sum of sqrt(1 - G(n)) for n = 1..horizon.

    The hint is advisory: it is true when the law is known to have a finite
    moment of order 2 + eps, which implies summability of the full series.
    """
    if horizon < 1:
        raise DistributionError("horizon must be >= 1")
    n = np.arange(1, horizon + 1)
    partial = float(np.sum(np.sqrt(service.sf(n))))
    return TailCheck(partial, service.family in _LIGHT_TAILED)


# -- constructors --------------------------------------------------------------

def _truncate_at(sf_fn, start: int) -> int:
    """Smallest x >= start with sf(x) < TAIL_EPS."""
    hi = max(start, 1)
    while sf_fn(hi) >= TAIL_EPS:
        hi *= 2
    lo = start
    while lo < hi:
        mid = (lo + hi) // 2
        if sf_fn(mid) < TAIL_EPS:
            hi = mid
        else:
            lo = mid + 1
    return hi


def poisson(lam: float) -> DiscretePMF:
    if not lam > 0:
        raise DistributionError("poisson rate must be positive")
    top = _truncate_at(lambda x: stats.poisson.sf(x, lam), 0)
    values = np.arange(0, top + 1)
    return DiscretePMF("poisson", (float(lam),), values, stats.poisson.pmf(values, lam))


def geometric(p: float) -> DiscretePMF:
    """Geometric law on {1, 2, ...}: P(X = j) = p (1 - p)^(j - 1)."""
    if not 0 < p <= 1:
        raise DistributionError("geometric p must lie in (0, 1]")
    if p == 1:
        top = 1
    else:
        top = max(1, math.ceil(math.log(TAIL_EPS) / math.log1p(-p)))
    values = np.arange(1, top + 1)
    return DiscretePMF("geometric", (float(p),), values, p * (1 - p) ** (values - 1))


def negbin(r: float, p: float) -> DiscretePMF:
    """Negative binomial on {0, 1, ...} counting failures before r successes."""
    if not (r > 0 and 0 < p <= 1):
        raise DistributionError("negbin needs r > 0 and p in (0, 1]")
    top = _truncate_at(lambda x: stats.nbinom.sf(x, r, p), 0)
    values = np.arange(0, top + 1)
    return DiscretePMF("negbin", (float(r), float(p)), values, stats.nbinom.pmf(values, r, p))


def point(s: int) -> DiscretePMF:
    s = int(s)
    if s < 0:
        raise DistributionError("point mass location must be nonnegative")
    return DiscretePMF("point", (s,), np.array([s]), np.array([1.0]))


def empirical(values, probs) -> DiscretePMF:
    values = np.asarray(values, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    order = np.argsort(values)
    values, probs = values[order], probs[order]
    if np.any(np.diff(values) == 0):
        raise DistributionError("duplicate support points")
    keep = probs > 0
    return DiscretePMF("empirical", (), values[keep], probs[keep])


def load_empirical_csv(path) -> DiscretePMF:
    """Read a two-column ``value,probability`` CSV (header required)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["value", "probability"]:
            raise DistributionError(f"{path}: expected header 'value,probability'")
        values, probs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values.append(int(row[0]))
                probs.append(float(row[1]))
            except (ValueError, IndexError):
                raise DistributionError(f"{path}:{lineno}: malformed row {row!r}") from None
    return empirical(values, probs)


def parse_spec(spec: str) -> DiscretePMF:
    """Parse a model spec such as ``poisson:1``, ``geometric:0.5``, ``negbin:2,0.5``,
    ``point:3`` or ``empirical:path/to/pmf.csv``."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "poisson":
            return poisson(float(arg))
        if name == "geometric":
            return geometric(float(arg))
        if name == "negbin":
            r, p = arg.split(",")
            return negbin(float(r), float(p))
        if name == "point":
            return point(int(arg))
    except ValueError as exc:
        if isinstance(exc, DistributionError):
            raise
        raise DistributionError(f"bad parameters in model spec {spec!r}") from None
    if name == "empirical":
        return load_empirical_csv(arg)
    raise DistributionError(f"unknown model spec {spec!r}")


# -- continuous service samplers for the M/G/inf trace generator -----------------

@dataclass(frozen=True)
class Exponential:
    rate: float

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size)

    def cdf(self, t):
        return -np.expm1(-self.rate * np.asarray(t, dtype=np.float64))


@dataclass(frozen=True)
class Deterministic:
    duration: float

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.duration))

    def cdf(self, t):
        return (np.asarray(t, dtype=np.float64) >= self.duration).astype(np.float64)


def parse_continuous_spec(spec: str):
    """``exp:rate`` or ``det:duration``."""
    name, _, arg = spec.partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise DistributionError(f"bad continuous service spec {spec!r}") from None
    if not value > 0:
        raise DistributionError("continuous service parameter must be positive")
    if name == "exp":
        return Exponential(value)
    if name == "det":
        return Deterministic(value)
    raise DistributionError(f"unknown continuous service spec {spec!r}")
