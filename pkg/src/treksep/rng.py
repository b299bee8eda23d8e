"""Repo-wide random number generation.

Every random draw goes through a Philox (counter-based) generator keyed by
an explicit integer seed, so results are reproducible across platforms.
"""

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    if seed < 0 or any(s < 0 for s in stream):
        raise ValueError("seeds must be nonnegative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def derive_seed(seed: int, *stream: int) -> int:
    """Deterministic child seed for a sub-task such as one replication."""
    return int(np.random.SeedSequence([seed, *stream]).generate_state(1, np.uint64)[0] >> 1)
