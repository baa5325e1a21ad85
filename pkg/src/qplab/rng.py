"""Deterministic random-stream derivation.

Every stochastic routine takes a seed (int or Generator); child streams are
derived from (seed, purpose-string) so independent pieces of a campaign can
be generated in any order, or in parallel, with identical results.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _purpose_words(purpose: str) -> list[int]:
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def derive_rng(seed, purpose: str = "") -> np.random.Generator:
    """Generator for (seed, purpose); passes through an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed)] + (_purpose_words(purpose) if purpose else [])
    return np.random.default_rng(np.random.SeedSequence(entropy))
