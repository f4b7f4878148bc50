"""Seeded 64-bit mixing and row indexing shared by every sketch scheme.

All sketches obtain slot indices from this module so that cross-scheme
comparisons use identical placements: one seed per row, one reduction per
table width. Reduction takes the high bits of ``hash * width`` instead of a
modulo, which stays bias-free for widths that are not powers of two.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_PHI = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_SEED_TWEAK = 0x6A09E667F3BCC909


def mix64(value: int) -> int:
    """Finalizing avalanche over 64 bits."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def seed_state(seed: int) -> int:
    """Whitened per-seed constant; distinct seeds give unrelated hash streams."""
    return mix64((seed * _PHI + _SEED_TWEAK) & MASK64)


def hash_u64(key: int, seed: int) -> int:
    """64-bit hash of an 8-byte key under a seed."""
    return mix64((key & MASK64) ^ seed_state(seed))


def hash_bytes(key: bytes, seed: int) -> int:
    """64-bit hash of an arbitrary-length key under a seed.

    Keys of at most 8 bytes hash identically to their little-endian integer
    value through :func:`hash_u64`; longer keys are folded 8 bytes at a time.
    """
    if len(key) <= 8:
        return hash_u64(int.from_bytes(key, "little"), seed)
    h = seed_state(seed) ^ mix64(len(key))
    for off in range(0, len(key), 8):
        h = mix64(h ^ int.from_bytes(key[off : off + 8], "little"))
    return h


def reduce_to_width(hash64: int, width: int) -> int:
    """Map a 64-bit hash to ``[0, width)`` by multiply-shift."""
    return (hash64 * width) >> 64


def derive_seeds(master: int, count: int) -> tuple[int, ...]:
    """Deterministic per-row seeds from one master seed."""
    return tuple(hash_u64(0x52_4F_57 + r, master) for r in range(count))


class RowHasher:
    """One row's placement function: ``key -> slot in [0, width)``."""

    __slots__ = ("seed", "width", "_state")

    def __init__(self, seed: int, width: int) -> None:
        if width <= 0:
            raise ValueError("width must be positive")
        self.seed = seed
        self.width = width
        self._state = seed_state(seed)

    def index(self, key: bytes) -> int:
        if len(key) <= 8:
            return (mix64(int.from_bytes(key, "little") ^ self._state) * self.width) >> 64
        return reduce_to_width(hash_bytes(key, self.seed), self.width)

    def index_u64(self, key: int) -> int:
        return (mix64((key & MASK64) ^ self._state) * self.width) >> 64


def hash_batch(keys: np.ndarray, seed: int) -> np.ndarray:
    """Vectorized :func:`hash_u64` over a uint64 key array."""
    z = np.asarray(keys, dtype=np.uint64) ^ np.uint64(seed_state(seed))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def index_batch(keys: np.ndarray, seed: int, width: int) -> np.ndarray:
    """Vectorized multiply-shift placement; matches the scalar path exactly."""
    h = hash_batch(keys, seed)
    w = np.uint64(width)
    hi = h >> np.uint64(32)
    lo = h & np.uint64(0xFFFFFFFF)
    return ((hi * w + ((lo * w) >> np.uint64(32))) >> np.uint64(32)).astype(np.int64)
