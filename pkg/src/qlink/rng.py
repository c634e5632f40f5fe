"""Counter-based random streams keyed by (master seed, label path).

Any component can derive an independent, reproducible generator from the run's
master seed plus a label such as ("shuttle", "valley", 17), without caring in
which order other components draw numbers.
"""
import hashlib

import numpy as np


def _key(master_seed, labels):
    h = hashlib.blake2b(digest_size=16)
    h.update(str(int(master_seed)).encode())
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest(), "little")


def stream(master_seed, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=_key(master_seed, labels)))


def as_generator(seed_or_rng, *labels):
    """Pass generators through; turn integers (or None) into a keyed stream."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(0 if seed_or_rng is None else seed_or_rng, *labels)


def derive_seed(master_seed, *labels) -> int:
    """A 63-bit integer seed for components that take plain integer seeds."""
    return _key(master_seed, labels) >> 65
