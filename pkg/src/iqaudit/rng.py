"""Keyed counter-based PRNG streams.

Every stochastic routine in the toolkit derives its randomness from a
Philox stream keyed by a stable hash of (seed, *context) so results are
independent of iteration order, sharding, and platform.
"""
from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream_key", "keyed_stream"]

_SEP = b"\x1f"


def stream_key(*parts: int | str) -> int:
    """Return a stable 128-bit key derived from the given parts.

    Parts are type-tagged before hashing so ("1", 2) and (1, "2") and
    (12,) all map to distinct keys.
    """
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        if isinstance(p, bool) or not isinstance(p, (int, str)):
            raise TypeError(f"stream key parts must be int or str, got {type(p).__name__}")
        tag = b"i:" if isinstance(p, int) else b"s:"
        h.update(tag + str(p).encode("utf-8") + _SEP)
    return int.from_bytes(h.digest(), "little")


def keyed_stream(*parts: int | str) -> np.random.Generator:
    """Return a Generator over a Philox stream keyed by the given parts."""
    return np.random.Generator(np.random.Philox(key=stream_key(*parts)))
