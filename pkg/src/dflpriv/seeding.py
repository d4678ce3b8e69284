"""Deterministic seed derivation for reproducible (and parallel) Monte Carlo."""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1

__all__ = ["derive_seed", "rng_for"]


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit seed derived from a master seed and a label path.

    The mix is a keyed blake2b over a canonical byte encoding, so the same
    (master, parts) always yields the same seed on every platform and in
    every process. Parts may be ints, floats, strings, or bools.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", int(master) & _MASK64))
    for part in parts:
        if isinstance(part, bool):
            h.update(b"b" + (b"\x01" if part else b"\x00"))
        elif isinstance(part, (int, np.integer)):
            h.update(b"i" + struct.pack("<q", int(part)))
        elif isinstance(part, (float, np.floating)):
            h.update(b"f" + struct.pack("<d", float(part)))
        elif isinstance(part, str):
            data = part.encode("utf-8")
            h.update(b"s" + struct.pack("<I", len(data)) + data)
        else:
            raise TypeError(f"cannot derive a seed from {type(part).__name__}")
    return int.from_bytes(h.digest(), "little")


def rng_for(master: int, *parts) -> np.random.Generator:
    """Generator seeded with ``derive_seed(master, *parts)``."""
    return np.random.default_rng(derive_seed(master, *parts))
