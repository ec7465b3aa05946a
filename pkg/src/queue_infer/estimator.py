"""Sequence-of-differences estimation of the service-time cdf.

Given only counts A(t), D(t), the elapsed time since the most recent strictly
earlier arrival slot, Z(t), links departures to arrivals through

    H(x) = E[D 1{Z <= x}] / E[D] = 1 - c^x (1 - G(x)),   c = P(A = 0),

which is inverted with plug-in estimates of c and H.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import isotonic_regression

from .distributions import DiscretePMF
from .errors import EstimationError
from .simulator import CountPaths

# Largest x kept by the inversion satisfies c_hat^x > X_CAP_FLOOR.
X_CAP_FLOOR = 1e-12


@dataclass
class DifferenceSeq:
    """Z(t) for slots 1..n; entries before ``valid_from`` (1-based) are 0 and meaningless."""

    z: np.ndarray
    valid_from: int

    @property
    def valid(self) -> np.ndarray:
        return self.z[self.valid_from - 1:]


def compute_Z(paths: CountPaths) -> DifferenceSeq:
    a = paths.arrivals
    n = a.size
    if n < 2:
        raise EstimationError("need at least 2 slots")
    t = np.arange(1, n + 1)
    last_arrival = np.maximum.accumulate(np.where(a > 0, t, 0))
    if last_arrival[-1] == 0:
        raise EstimationError("no arrivals observed")
    valid_from = int(np.argmax(a > 0)) + 2
    prev = np.concatenate([[0], last_arrival[:-1]])
    z = np.where(prev > 0, t - prev, 0)
    return DifferenceSeq(z.astype(np.int64), valid_from)


def estimate_c(paths: CountPaths) -> float:
    """Fraction of slots without arrivals."""
    return float(np.mean(paths.arrivals == 0))


def valid_slice(paths: CountPaths, z: DifferenceSeq) -> tuple[np.ndarray, np.ndarray]:
    """(D, Z) restricted to slots where Z is defined."""
    start = z.valid_from - 1
    return paths.departures[start:], z.z[start:]


def estimate_H(paths: CountPaths, z: DifferenceSeq, x_max: int) -> np.ndarray:
    """H_hat(x) for x = 1..x_max, summing only over slots with a defined Z."""
    if x_max < 1:
        raise EstimationError("x_max must be >= 1")
    d, zz = valid_slice(paths, z)
    total = d.sum()
    if total == 0:
        raise EstimationError("no departures observed")
    # weak inequality Z <= x
    mass = np.bincount(zz, weights=d, minlength=x_max + 1)
    return np.minimum(np.cumsum(mass)[1:x_max + 1] / total, 1.0)


def x_cap_for(c_hat: float) -> int:
    """Largest x with c_hat^x > X_CAP_FLOOR."""
    x = math.floor(math.log(X_CAP_FLOOR) / math.log(c_hat))
    while x > 0 and c_hat**x <= X_CAP_FLOOR:
        x -= 1
    while c_hat ** (x + 1) > X_CAP_FLOOR:
        x += 1
    return x


class GEstimate(NamedTuple):
    raw: np.ndarray
    mono: np.ndarray
    x_cap: int


def monotonize(raw: np.ndarray) -> np.ndarray:
    """Nearest nondecreasing sequence in least squares, clipped to [0, 1]."""
    if raw.size == 0:
        return raw.copy()
    return np.clip(isotonic_regression(raw, increasing=True).x, 0.0, 1.0)


def estimate_G(h_hat: np.ndarray, c_hat: float, x_max: int) -> GEstimate:
    """Invert H = 1 - c^x (1 - G) with plug-in c_hat; values past the cap are dropped."""
    if not 0.0 < c_hat < 1.0:
        raise EstimationError("degenerate arrival-zero frequency")
    h_hat = np.asarray(h_hat, dtype=np.float64)
    x_cap = x_cap_for(c_hat)
    m = min(x_max, x_cap, h_hat.size)
    x = np.arange(1, m + 1)
    raw = 1.0 - c_hat ** (-x.astype(np.float64)) * (1.0 - h_hat[:m])
    return GEstimate(raw, monotonize(raw), x_cap)


def h_from_g(g, c: float, x_max: int) -> np.ndarray:
    """Forward map H(x) = 1 - c^x (1 - G(x)) for x = 1..x_max.

    ``g`` is either a sequence G(1..x_max) or a :class:`DiscretePMF`.
    """
    x = np.arange(1, x_max + 1, dtype=np.float64)
    if isinstance(g, DiscretePMF):
        tail = np.asarray(g.sf(x), dtype=np.float64)
    else:
        tail = 1.0 - np.asarray(g, dtype=np.float64)[:x_max]
        x = x[:tail.size]
    return 1.0 - c**x * tail


@dataclass
class EstimateSet:
    c_hat: float
    h_hat: np.ndarray
    g_hat_raw: np.ndarray
    g_hat_mono: np.ndarray
    n_used: int
    sum_D: int
    x_max: int
    x_cap: int
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "c_hat": self.c_hat,
            "x_max": self.x_max,
            "x_cap": self.x_cap,
            "h_hat": self.h_hat.tolist(),
            "g_raw": self.g_hat_raw.tolist(),
            "g_mono": self.g_hat_mono.tolist(),
            "n_used": self.n_used,
            "sum_D": self.sum_D,
            "warnings": list(self.warnings),
        }


def estimate(paths: CountPaths, x_max: int, z: DifferenceSeq | None = None) -> EstimateSet:
    """Full pipeline: Z, c_hat, H_hat, G_hat (raw and monotone)."""
    if z is None:
        z = compute_Z(paths)
    c_hat = estimate_c(paths)
    h_hat = estimate_H(paths, z, x_max)
    g = estimate_G(h_hat, c_hat, x_max)
    d, _ = valid_slice(paths, z)
    warnings = []
    if x_max > g.x_cap:
        warnings.append(
            f"x-cap: G estimates truncated at x={g.x_cap} "
            f"(c_hat^x would fall below {X_CAP_FLOOR:g})"
        )
    if np.any((g.raw < 0) | (g.raw > 1)):
        warnings.append("raw G estimate leaves [0, 1]; see g_mono for the projected version")
    return EstimateSet(
        c_hat=c_hat,
        h_hat=h_hat,
        g_hat_raw=g.raw,
        g_hat_mono=g.mono,
        n_used=int(d.size),
        sum_D=int(d.sum()),
        x_max=int(x_max),
        x_cap=int(g.x_cap),
        warnings=warnings,
    )
