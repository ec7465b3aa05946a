"""Nonparametric service-time estimation for discrete-time GI/G/inf queues
from arrival and departure counts."""

__version__ = "0.1.0"

from .distributions import DiscretePMF, geometric, negbin, parse_spec, point, poisson  # noqa: E402
from .simulator import CountPaths, SimConfig, discretize, simulate_discrete  # noqa: E402
from .estimator import EstimateSet, compute_Z, estimate, estimate_G, estimate_H, estimate_c, h_from_g  # noqa: E402

__all__ = [
    "CountPaths", "DiscretePMF", "EstimateSet", "SimConfig", "compute_Z", "discretize",
    "estimate", "estimate_G", "estimate_H", "estimate_c", "geometric", "h_from_g",
    "negbin", "parse_spec", "point", "poisson", "simulate_discrete",
]
