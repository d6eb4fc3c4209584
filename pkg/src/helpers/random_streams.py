"""Seeded counter-based random streams.

Every stream is a Philox generator keyed by the run seed plus a spawn key,
so shard i of a run draws the same numbers no matter which worker runs it.
"""

import numpy as np


def shard_rng(seed: int, shard: int) -> np.random.Generator:
    """Stream for Monte-Carlo shard number `shard` of a run."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(shard,)))
    )


def sample_rng(seed: int, label: str) -> np.random.Generator:
    """Stream for a labelled auxiliary draw, e.g. parameter sampling per class."""
    key = tuple(label.encode("utf-8"))
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0, *key)))
    )
