"""Counter-based random streams.

Every random decision in the toolkit is keyed by ``(seed, stream, index)`` so
that results do not depend on iteration order or on how work is split across
processes.
"""
import hashlib
import random

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, stream: str, index: int) -> int:
    h = hashlib.blake2b(f"{seed}\x1f{stream}\x1f{index}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def stream_rng(seed: int, stream: str, index: int) -> random.Random:
    return random.Random(derive_seed(seed, stream, index))


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised SplitMix64 finaliser over uint64 arrays."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x


def keyed_u64(seed: int, stream: str, indices) -> np.ndarray:
    """One pseudo-random 64-bit key per index, a pure function of (seed, stream, index)."""
    base = derive_seed(seed, stream, 0) & _MASK64
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return splitmix64(splitmix64(idx ^ np.uint64(base)) + np.uint64(base))


def resample_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed & _MASK64, index])
