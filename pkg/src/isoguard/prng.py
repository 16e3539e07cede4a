"""Deterministic seed derivation and hash-based uniform draws.

Every random decision in the toolkit flows from one 64-bit master seed.
Sub-seeds are derived by hashing (splitmix64) rather than by sharing a
sequential stream, so trees built concurrently draw exactly the same
numbers regardless of build order.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SEED0 = np.uint64(0x8B72E0F5E28E3C4D)
# 2^-53: maps the top 53 bits of a hash onto [0, 1)
_INV53 = float(2.0 ** -53)


def splitmix64(x: np.uint64 | np.ndarray) -> np.uint64 | np.ndarray:
    """splitmix64 finalizer; accepts a uint64 scalar or array. Wraparound
    on overflow is the point, so the overflow warning is silenced."""
    with np.errstate(over="ignore"):
        z = (x if isinstance(x, np.ndarray) else np.uint64(x)) + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _fold(h: np.uint64, part: int | str) -> np.uint64:
    if isinstance(part, str):
        for b in part.encode("utf-8"):
            h = splitmix64(h ^ np.uint64(b))
        return splitmix64(h ^ np.uint64(len(part)))
    return splitmix64(h ^ np.uint64(int(part) & _MASK))


def hash64(*parts: int | str) -> np.uint64:
    """Fold integers and short string tags into one uint64 hash."""
    h = _SEED0
    for part in parts:
        h = _fold(h, part)
    return h


def derive_seed(master: int, *tags: int | str) -> int:
    """Stable sub-seed for a named stage or component."""
    return int(hash64(master, *tags))


def unit_uniforms(base: np.uint64, keys: np.ndarray) -> np.ndarray:
    """Hash-derived floats in [0, 1), one per key, independent of key order."""
    with np.errstate(over="ignore"):
        mixed = splitmix64(base ^ splitmix64(keys.astype(np.uint64)))
    return (mixed >> np.uint64(11)).astype(np.float64) * _INV53
