"""Deterministic, labeled RNG streams.

Every stochastic component draws from its own named stream derived from the
run's master seed, so adding a consumer never shifts another consumer's draws.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *labels) -> np.random.Generator:
    """Return a Generator keyed by (seed, labels).

    Labels may be strings or ints; strings are hashed with crc32 so the
    mapping is stable across processes and Python versions.
    """
    keys = [int(seed) & 0xFFFFFFFF]
    for lab in labels:
        if isinstance(lab, str):
            keys.append(zlib.crc32(lab.encode("utf-8")))
        else:
            keys.append(int(lab) & 0xFFFFFFFF)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))
