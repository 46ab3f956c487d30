"""Counter-style seed derivation on top of numpy's SeedSequence.

Every random stream in the package is addressed by ``(seed, *keys)``, so a
stream never depends on how many other streams were drawn before it.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# stream domains
SERIES = 1
LIMIT = 2
STUDY = 3
CENTERING = 4


def _entropy(seed):
    return int(seed) & _MASK64


def seed_sequence(seed, *keys):
    return np.random.SeedSequence(_entropy(seed), spawn_key=tuple(int(k) for k in keys))


def generator(seed, *keys):
    """A PCG64 generator for the stream ``(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed, *keys):
    """A 63-bit integer seed for the sub-stream ``(seed, *keys)``."""
    state = seed_sequence(seed, *keys).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
