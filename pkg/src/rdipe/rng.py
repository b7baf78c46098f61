"""Counter-based RNG substreams.

Every stochastic step draws from a Philox generator keyed by
``(master_seed, *keys)``, so round ``i`` of a run always sees the same
stream regardless of how rounds are scheduled.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed for ``(seed, *keys)``, for APIs that take plain ints."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
