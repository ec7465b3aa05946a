"""Discrete-time GI/G/inf simulation and discretized continuous M/G/inf traces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import seeding
from .distributions import DiscretePMF
from .errors import SimulationError

BURN_IN_TAIL = 1e-6
BURN_IN_CAP = 10**6


@dataclass
class CountPaths:
    """Aligned arrival/departure counts A(1..n), D(1..n)."""

    arrivals: np.ndarray
    departures: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.arrivals = np.asarray(self.arrivals, dtype=np.int64)
        self.departures = np.asarray(self.departures, dtype=np.int64)
        if self.arrivals.ndim != 1 or self.arrivals.shape != self.departures.shape:
            raise SimulationError("arrivals and departures must be 1-D and equally long")
        if self.arrivals.size < 1:
            raise SimulationError("count paths need at least one slot")
        if np.any(self.arrivals < 0) or np.any(self.departures < 0):
            raise SimulationError("counts must be nonnegative")

    @property
    def n(self) -> int:
        return int(self.arrivals.size)


@dataclass(frozen=True)
class SimConfig:
    n: int
    burn_in: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise SimulationError("n must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise SimulationError("burn_in must be >= 0")


@dataclass
class ContinuousTrace:
    arrival_times: np.ndarray
    departure_times: np.ndarray
    horizon: float
    dropped_departures: int = 0


def default_burn_in(service: DiscretePMF) -> int:
    """Smallest W with 1 - G(W) < 1e-6, capped at 1e6."""
    w = 1
    while service.sf(w) >= BURN_IN_TAIL:
        if w >= BURN_IN_CAP:
            return BURN_IN_CAP
        w *= 2
    lo, hi = w // 2, w
    while lo < hi:
        mid = (lo + hi) // 2
        if service.sf(mid) < BURN_IN_TAIL:
            hi = mid
        else:
            lo = mid + 1
    return min(hi, BURN_IN_CAP)


def check_models(arrival: DiscretePMF, service: DiscretePMF) -> None:
    c = arrival.zero_mass
    if not 0.0 < c < 1.0:
        raise SimulationError(f"arrival law needs 0 < P(A=0) < 1, got {c!r}")
    if service.mass(0) > 0:
        raise SimulationError("service law has mass at 0; service times must be >= 1")


def simulate_discrete(arrival: DiscretePMF, service: DiscretePMF, cfg: SimConfig) -> CountPaths:
    """Simulate slots 1-burn_in .. n and return the observed window 1..n.

    Every customer arriving in slot t with service S leaves in slot t + S.
    Burn-in customers departing inside the window are counted, which emulates
    a system that has been running since the infinite past.
    """
    check_models(arrival, service)
    burn_in = default_burn_in(service) if cfg.burn_in is None else int(cfg.burn_in)
    rng = seeding.rng_for(cfg.seed, seeding.SIMULATION)

    total = burn_in + cfg.n
    a_all = arrival.sample(rng, total)
    services = service.sample(rng, int(a_all.sum()))
    dep_index = np.repeat(np.arange(total, dtype=np.int64), a_all) + services

    in_window = (dep_index >= burn_in) & (dep_index < total)
    departures = np.bincount(dep_index[in_window] - burn_in, minlength=cfg.n)
    meta = {
        "seed": int(cfg.seed),
        "burn_in": burn_in,
        "arrival": str(arrival),
        "service": str(service),
        "customers_total": int(services.size),
        "departed_before_window": int(np.count_nonzero(dep_index < burn_in)),
        "in_service_at_end": int(np.count_nonzero(dep_index >= total)),
    }
    return CountPaths(a_all[burn_in:], departures, meta)


def simulate_mg_inf_continuous(
    lam: float,
    service_sampler: Callable[[np.random.Generator, int], np.ndarray],
    horizon: float,
    seed: int,
) -> ContinuousTrace:
    """Poisson(lam) arrivals on [0, horizon); each departs after one sampled duration.

    Departures after ``horizon`` are dropped and counted.
    """
    if not lam > 0 or not horizon > 0:
        raise SimulationError("lambda and horizon must be positive")
    rng = seeding.rng_for(seed, seeding.SIMULATION)
    count = rng.poisson(lam * horizon)
    arrivals = np.sort(rng.uniform(0.0, horizon, count))
    durations = np.asarray(service_sampler(rng, count), dtype=np.float64)
    if np.any(durations <= 0):
        raise SimulationError("service durations must be positive")
    departures = arrivals + durations
    kept = departures <= horizon
    return ContinuousTrace(
        arrival_times=arrivals,
        departure_times=np.sort(departures[kept]),
        horizon=float(horizon),
        dropped_departures=int(count - np.count_nonzero(kept)),
    )


def discretize(trace: ContinuousTrace, h: float) -> CountPaths:
    """Bin events into slots: slot i collects times in [h(i-1), h i)."""
    if not h > 0:
        raise SimulationError("step size h must be positive")
    a_bin = np.floor(np.asarray(trace.arrival_times) / h).astype(np.int64)
    d_bin = np.floor(np.asarray(trace.departure_times) / h).astype(np.int64)
    n = max(1, math.ceil(trace.horizon / h))
    if a_bin.size:
        n = max(n, int(a_bin.max()) + 1)
    if d_bin.size:
        n = max(n, int(d_bin.max()) + 1)
    meta = {
        "h": float(h),
        "horizon": trace.horizon,
        "dropped_departures": trace.dropped_departures,
    }
    return CountPaths(np.bincount(a_bin, minlength=n), np.bincount(d_bin, minlength=n), meta)
