"""Deterministic seed derivation for nested experiment structure.

Every generated instance, solver run, sweep cell, and tuner round gets its
own child seed mixed from a master seed plus a label path, so any single
artifact can be reproduced in isolation without replaying the whole batch.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: object) -> int:
    """Mix arbitrary labels (ints, strings, floats) into a 64-bit seed.

    The mixing is blake2b over the repr of the label tuple, so it is stable
    across processes, platforms, and Python versions.
    """
    text = repr(tuple(parts)).encode("utf-8")
    digest = hashlib.blake2b(text, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_from(*parts: object) -> np.random.Generator:
    """A fresh PCG64 generator seeded from the given label path."""
    return np.random.default_rng(derive_seed(*parts))
