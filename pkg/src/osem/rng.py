"""Seed derivation.

All randomness in a run flows from one root seed.  Sub-streams are
derived from (seed, stream label) so that adding or reordering consumers
does not perturb unrelated streams.  The label is hashed with crc32,
which is stable across platforms and Python versions.
"""

from __future__ import annotations

import zlib

import numpy as np

SEED_SCHEME = "seedseq-crc32-v1"


def derive_seed_sequence(seed: int, label: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), zlib.crc32(label.encode("utf-8"))])


def derive_rng(seed: int, label: str) -> np.random.Generator:
    """Generator for the sub-stream identified by ``label``."""
    return np.random.default_rng(derive_seed_sequence(seed, label))
