"""Deterministic RNG streams for reproducible parallel work.

Every randomized component draws from a named substream of a single master
seed.  Substreams are derived with ``numpy.random.SeedSequence`` spawn keys
and fed to the counter-based Philox generator, so results do not depend on
scheduling or worker count.
"""

from __future__ import annotations

import secrets

import numpy as np

__all__ = ["stream", "derive_seed", "fresh_seed"]


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for substream `path` of `seed`.

    Identical (seed, path) pairs always yield bit-identical streams.
    """
    ss = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(int(p) for p in path)
    )
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Deterministically derive a child seed (u64) from `seed` and `path`."""
    ss = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(int(p) for p in path)
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fresh_seed() -> int:
    """Draw a fresh u64 seed from OS entropy (callers must echo it)."""
    return secrets.randbits(64)
