"""Seed-derived random streams.

Every consumer of randomness gets its own generator keyed by
``(seed, stream, index)`` so results never depend on call order or on how
work is split across workers.
"""

import numpy as np

CRITICAL_VALUE = 0
REPLICATIONS = 1
ADVERSARIAL = 2

CHUNK_SIZE = 8192


def generator(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Independent Philox generator for one (stream, index) cell."""
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def chunks(n: int, size: int = CHUNK_SIZE):
    """Fixed partition of ``range(n)`` into (chunk_index, start, stop)."""
    for k, start in enumerate(range(0, n, size)):
        yield k, start, min(start + size, n)
