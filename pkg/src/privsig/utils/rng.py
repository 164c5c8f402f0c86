"""Seeded counter-based random streams.

Every random draw in privsig goes through `make_rng`. A stream is keyed by
the 64-bit seed plus an optional tuple of integers (candidate index, batch
role, ...), so independent streams can be derived deterministically and
consumed in any order or in parallel. Reproducibility is per build.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a Philox generator for (seed, *stream)."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    entropy = [int(seed) & SEED_MASK, *(int(s) for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

