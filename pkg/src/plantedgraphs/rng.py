"""Seed derivation and counter-based random streams.

Every random stream is a numpy ``Generator`` over the Philox-4x64 counter-based
bit generator. Its 128-bit key is the BLAKE2b digest of
``(master_seed, purpose_tag, index)``, so streams for different purposes or
trial indices never overlap and can be created in any order.
"""

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def _digest(master_seed, tag, index, size):
    h = hashlib.blake2b(digest_size=size, person=b"plantedgraphs")
    h.update(struct.pack("<Q", int(master_seed) & MASK64))
    h.update(str(tag).encode())
    h.update(b"\x00")
    h.update(struct.pack("<Q", int(index) & MASK64))
    return h.digest()


def derive_seed(master_seed, tag, index=0):
    """Split a 64-bit child seed off ``master_seed`` for ``(tag, index)``."""
    return int.from_bytes(_digest(master_seed, tag, index, 8), "little")


def make_rng(seed, tag, index=0):
    """Return a Philox generator keyed on ``(seed, tag, index)``."""
    key = np.frombuffer(_digest(seed, tag, index, 16), dtype=np.uint64).copy()
    return np.random.Generator(np.random.Philox(key=key))
