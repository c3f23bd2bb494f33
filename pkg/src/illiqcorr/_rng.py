"""Deterministic random sub-streams.

A stream is identified by a root seed and an integer key path, so the
draws for replicate ``b`` never depend on which worker computes it or on
how many replicates were requested.
"""

import numpy as np


def substream(seed, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def subseed(seed, *key) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
