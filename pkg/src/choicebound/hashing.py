"""64-bit mixing primitives.

``mix64`` is the SplitMix64 finalizer. It backs both the ``mix`` bucket
hasher and the counter-based PRNG used by the fact generator.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

MASK64 = (1 << 64) - 1
MASK63 = (1 << 63) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix_fold(seed: int, values: Iterable[int]) -> int:
    """Fold 64-bit values into one non-negative 63-bit hash.

    h0 = mix64(seed); h_{i+1} = mix64(h_i ^ (v_i + GOLDEN)); result h_n >> 1.
    Each value is read as unsigned 64-bit (two's complement for negatives).
    """
    h = mix64(seed)
    for v in values:
        h = mix64(h ^ ((v + GOLDEN) & MASK64))
    return h >> 1


def splitmix_draw(seed: int, index: int) -> int:
    """The ``index``-th output of the SplitMix64 stream started at ``seed``."""
    return mix64(seed + (index + 1) * GOLDEN)


def splitmix_draws(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized ``[splitmix_draw(seed, i) for i in range(start, start + count)]``."""
    with np.errstate(over="ignore"):
        idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = np.uint64(seed & MASK64) + idx * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))
