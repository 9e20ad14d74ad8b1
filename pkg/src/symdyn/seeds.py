"""Deterministic seed derivation.

All randomness in the package flows from one master seed through
``seed_path``: every independent stream is identified by the master seed
followed by a path of labels (command name, run index, target column, ...).
String labels are folded to integers with CRC-32, so the mapping is stable
across processes and platforms.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _as_entropy(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    raise TypeError(f"seed path parts must be int or str, got {type(part)!r}")


def seed_path(*parts) -> np.random.SeedSequence:
    if not parts:
        raise ValueError("seed path must not be empty")
    return np.random.SeedSequence([_as_entropy(p) for p in parts])


def spawn_rng(*parts) -> np.random.Generator:
    """Generator for the stream identified by ``parts``."""
    return np.random.default_rng(seed_path(*parts))


def derive_seed(*parts) -> int:
    """64-bit child seed, for configs that carry plain integer seeds."""
    lo, hi = seed_path(*parts).generate_state(2, np.uint32)
    return (int(hi) << 32) | int(lo)
