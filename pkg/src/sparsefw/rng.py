"""Counter-based random streams keyed by ``(master_seed, trial_index, stream_tag)``.

Every random draw in the package goes through :func:`make_rng`, so a trial's
randomness depends only on its key and never on worker scheduling.
"""
from __future__ import annotations

import zlib

import numpy as np

__all__ = ["make_rng", "as_rng"]


def _tag_word(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    return zlib.crc32(str(tag).encode("utf-8"))


def make_rng(master_seed: int, trial_index: int = 0, stream_tag="main") -> np.random.Generator:
    """Return a Philox generator whose key is derived from the three identifiers."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(trial_index), _tag_word(stream_tag)]
    key = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def as_rng(seed) -> np.random.Generator:
    """Accept a Generator (returned as-is), an int seed, or None (seed 0)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(0 if seed is None else int(seed))
