"""Shared test helpers: key engineering and small stream builders."""

from __future__ import annotations

import numpy as np
import pytest

from siamsketch import SketchConfig, SiameseSketch


def key_bytes(value: int) -> bytes:
    return value.to_bytes(8, "little")


def keys_for_slots(sketch, row: int, wanted: list[int], limit: int = 500_000) -> list[int]:
    """Find integer keys hashing to the given slots of one row, in order."""
    found: dict[int, int] = {}
    k = 0
    while len(found) < len(set(wanted)) and k < limit:
        slot = sketch.slot_of(row, key_bytes(k))
        if slot in wanted and slot not in found:
            found[slot] = k
        k += 1
    if len(found) < len(set(wanted)):
        raise RuntimeError("key search exhausted")
    return [found[s] for s in wanted]


def collision_free_keys(sketch, count: int, rng: np.random.Generator) -> list[int]:
    """Keys whose 4-slot groups are disjoint in every row, so sum-mode
    estimates stay exact through every lifecycle level."""
    rows = sketch.config.rows
    taken: list[set[int]] = [set() for _ in range(rows)]
    keys: list[int] = []
    attempts = 0
    while len(keys) < count:
        attempts += 1
        if attempts > 100_000:
            raise RuntimeError("could not find enough collision-free keys")
        k = int(rng.integers(0, 1 << 64, dtype=np.uint64))
        groups = [sketch.slot_of(r, key_bytes(k)) >> 2 for r in range(rows)]
        if any(g in taken[r] for r, g in enumerate(groups)):
            continue
        for r, g in enumerate(groups):
            taken[r].add(g)
        keys.append(k)
    return keys


@pytest.fixture
def adjacent_pair_sketch():
    """A 1x4 sum-mode sketch plus two keys landing in slots 0 and 1."""
    cfg = SketchConfig(rows=1, width=4, shared_bits=4, merge_mode="sum", seeds=(42,))
    sketch = SiameseSketch(cfg)
    k0, k1 = keys_for_slots(sketch, 0, [0, 1])
    return sketch, k0, k1
