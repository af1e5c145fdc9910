"""Portable seeded generators.

All randomness in augmentation, shuffling and splitting comes from numpy's
Philox-4x64 counter-based bit generator keyed through SeedSequence, so a
given (seed, keys) tuple produces the same stream on every platform and
numpy version that ships Philox.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *(int(k) for k in keys)])))
