"""Seedable, splittable randomness used across the toolkit.

Every randomized routine receives an integer seed and derives its own
independent stream with `substream(seed, *key)`, where the key is a fixed
per-purpose tag (plus indices for per-vertex streams). Draw order inside a
stream is always documented at the call site: vertices ascending, colors by
sorted palette. Identical (inputs, seed) therefore produce bit-identical
results regardless of what other streams were consumed.
"""

from __future__ import annotations

import numpy as np

# stream tags; never reuse a tag for a second purpose
TAG_GEN = 1
TAG_PALETTE = 2
TAG_WCP = 3
TAG_LLL = 4
TAG_COVER = 5
TAG_PERMUTE = 6
TAG_SOLVE = 7


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return an independent PCG64 generator for (seed, key)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
