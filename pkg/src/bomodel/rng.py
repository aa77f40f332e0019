"""Seeded random streams.

Every random draw in the package comes from a Philox generator (counter
based, 64-bit keys).  Independent replicas get their own substream keyed by
hashing ``(seed, replica)`` through :class:`numpy.random.SeedSequence`, so a
replica's draws do not depend on which worker ran it or in what order.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def check_seed(seed):
    seed = int(seed)
    if seed < 0 or seed > SEED_MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed, *key):
    """Return a Philox generator for ``seed`` and an optional substream key."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def replica_stream(seed, replica):
    return stream(seed, replica)
