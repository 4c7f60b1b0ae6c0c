"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by a
``SeedSequence``. Child streams are derived by spawn keys, never shared.
"""
from __future__ import annotations

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed, *key: int) -> np.random.Generator:
    """Generator for the 64-bit ``seed``, optionally specialised by an integer key path."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def derive_seed(master_seed: int, *parts) -> int:
    """Deterministic 64-bit seed from a master seed and a tuple of labels.

    Strings are hashed with CRC32 so the result does not depend on
    Python's per-process hash randomisation.
    """
    key = tuple(name_key(p) if isinstance(p, str) else int(p) for p in parts)
    ss = np.random.SeedSequence(int(master_seed) & SEED_MASK, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def spawn(rng: np.random.Generator, n: int) -> list:
    """``n`` independent child generators of ``rng``."""
    return list(rng.spawn(n))
