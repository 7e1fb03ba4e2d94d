from enum import IntEnum

import numpy as np

from batchscope.core.exceptions import ConfigError

MAX_SEED = 2**64 - 1


class Stream(IntEnum):
    """Purpose keys for per-iteration random streams."""

    INIT = 0
    CANDIDATES = 1
    SELECTION = 2
    FIEE = 3
    FIBB = 4
    FIS = 5
    ANALYSIS = 6


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or not 0 <= int(seed) <= MAX_SEED:
        raise ConfigError("INVALID_SEED", f"seed must be an unsigned 64-bit integer, got {seed!r}", seed=str(seed))
    return int(seed)


def derive_seed(seed: int, *keys: int) -> int:
    """
    Deterministic child seed for (seed, *keys).

    Streams derived from different keys are statistically independent, so a
    step's output never depends on how many draws another step made.
    """
    sequence = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    if keys:
        return np.random.default_rng(derive_seed(seed, *keys))
    return np.random.default_rng(check_seed(seed))
