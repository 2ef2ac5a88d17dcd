"""Seeded randomness.

Every random draw in the package goes through :func:`make_rng`, which keys a
Philox counter-based bit generator with a ``SeedSequence`` built from the user
seed and a tuple of stream labels.  Streams are therefore independent and
reproducible across platforms.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

GENERATOR_NAME = "numpy.Philox(SeedSequence)"


def _label(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part) & 0xFFFFFFFFFFFFFFFF


def make_rng(seed: int, *stream) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_label(p) for p in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def seed_from_env(default: int = 0) -> int:
    value = os.environ.get("NDL_SEED")
    return int(value) if value not in (None, "") else default


def uniform_simplex(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform point of the (n-1)-simplex via normalized exponential spacings."""
    e = rng.standard_exponential(n)
    return e / e.sum()


def uniform_profile(rng: np.random.Generator, strategy_counts) -> np.ndarray:
    """Flat profile, uniform on the product of simplices."""
    return np.concatenate([uniform_simplex(rng, n) for n in strategy_counts])
