"""Seed-stream derivation.

Every random quantity in a run draws from its own ``random.Random`` stream,
seeded by BLAKE2b(master_seed, label). Python guarantees ``Random(int).random()``
yields the same sequence across platforms and versions, so topology, energy
and traffic are bit-stable and independent of the protocol under test.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(master_seed: int, label: str) -> int:
    h = hashlib.blake2b(f"{master_seed}:{label}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def stream(master_seed: int, label: str) -> random.Random:
    return random.Random(derive_seed(master_seed, label))
