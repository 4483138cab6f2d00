"""Seed derivation shared by every randomized step.

All randomness flows from one global seed: per-item generators are seeded with
FNV-1a-64(item key) XOR seed, so items can be processed in any order.
"""

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def derive_seed(seed: int, key: str) -> int:
    """Per-item seed: FNV-1a-64 of the UTF-8 key XOR the global seed."""
    return fnv1a_64(key.encode("utf-8")) ^ (seed & _MASK64)


def derived_rng(seed: int, key: str) -> np.random.Generator:
    """A numpy Generator seeded by derive_seed(seed, key)."""
    return np.random.default_rng(derive_seed(seed, key))
