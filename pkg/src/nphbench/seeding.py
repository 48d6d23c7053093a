"""Deterministic seed derivation for nested simulation streams.

Seeds are derived by hashing the canonical string of their coordinates
(master seed, scenario, setting, replication index, consumer name), so
every replication and every test's internal resampling gets its own
stream that does not depend on execution order, thread count, or which
other tests run.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "derive_rng"]


def derive_seed(*parts) -> int:
    """128-bit integer seed from the canonical string of ``parts``."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")


def derive_rng(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
