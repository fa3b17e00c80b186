"""Seed derivation and round-trip float formatting."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master_seed: int, *tags) -> int:
    """Stable 63-bit seed from a master seed and a tag path.

    Uses blake2b rather than hash() so results do not depend on
    PYTHONHASHSEED or platform; trials and grid arms seeded this way are
    independent of execution order.
    """
    text = str(int(master_seed)) + "/" + "/".join(str(t) for t in tags)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & 0x7FFFFFFFFFFFFFFF


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def fmt(x) -> str:
    """Full round-trip decimal formatting for CSV output."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))
