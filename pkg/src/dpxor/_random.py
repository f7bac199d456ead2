"""Counter-based seeding: every random stream is a pure function of (seed, path)."""

from __future__ import annotations

import hashlib

import numpy as np


def _word(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("seed components must be non-negative")
        return int(part)
    digest = hashlib.blake2b(str(part).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive(seed: int, *path) -> np.random.Generator:
    """Generator for stream ``path`` under ``seed``; independent of call order."""
    return np.random.default_rng(np.random.SeedSequence([_word(seed), *map(_word, path)]))


def uniform_below(rng: np.random.Generator, size: int) -> int:
    """Exactly uniform integer in ``range(size)``; works for sizes beyond 64 bits."""
    if size <= 1:
        return 0
    if size <= 1 << 62:
        return int(rng.integers(0, size))
    nbits = (size - 1).bit_length()
    nbytes = (nbits + 7) // 8
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "little") & ((1 << nbits) - 1)
        if v < size:
            return v
