"""Seed splitting.

All randomness derives from one 64-bit user seed. Each purpose gets its own
stream through ``SeedSequence(seed, spawn_key=...)``:

    simulation        (0,)
    bootstrap         (1,)
    band simulation   (2,)
    MC replicate r    (1000 + r, purpose)
"""
import numpy as np

SIMULATION = 0
BOOTSTRAP = 1
BANDS = 2
MC_BASE = 1000


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(stream)))


def replicate_stream(r: int) -> int:
    return MC_BASE + int(r)


def derived_seed(seed: int, *stream: int) -> int:
    """A 64-bit integer seed for a sub-stream, for APIs that take plain seeds."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(stream))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
