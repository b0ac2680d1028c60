"""
Deterministic sub-seed derivation.

One global seed fans out to independent per-component seeds by hashing the
seed together with a component name, so adding a component never shifts the
random streams of the others.
"""

from __future__ import annotations

import hashlib
from typing import Final

__all__ = ["derive_seed", "SEED_MASK"]

SEED_MASK: Final[int] = (1 << 64) - 1


def derive_seed(seed: int, name: str) -> int:
    """
    Return a 64-bit sub-seed for component *name*.

    The derivation is ``BLAKE2b-64(seed as 8 little-endian bytes || name)``
    read back as an unsigned little-endian integer.

    Raises:
        ValueError: if *seed* does not fit in 64 unsigned bits.
    """
    if not 0 <= seed <= SEED_MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    digest = hashlib.blake2b(
        seed.to_bytes(8, "little") + name.encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")
