"""Splittable deterministic seeding.

Every Monte Carlo sample derives its own seed from (master_seed, index,
stream), so samples can be generated in any order or in parallel and still
reproduce bit-identically.  The derivation is a SHA-256 hash, stable across
platforms and library versions.
"""

import hashlib

import numpy as np

_MASK63 = (1 << 63) - 1


def derive_seed(master_seed: int, index: int, stream: str = "") -> int:
    """Hash (master_seed, index, stream) into a nonnegative 63-bit seed.

    ``stream`` separates independent random streams that share the same
    sample index (e.g. transform parameters vs predictor seed).
    """
    payload = f"{master_seed}:{index}:{stream}".encode()
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little") & _MASK63


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for the given seed."""
    return np.random.Generator(np.random.PCG64(seed))
