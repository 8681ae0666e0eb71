"""Reproducible random streams.

Every random stream in the package is a :class:`numpy.random.Generator`
driven by the counter-based Philox bit generator.  Streams are derived
from a 64-bit master seed and a tuple of non-negative integer keys::

    stream(seed, *key) == Generator(Philox(SeedSequence(seed, spawn_key=key)))

so the stream for, e.g., run ``i`` of a multi-run is ``stream(seed, i)``
no matter in which order (or on which thread) the runs execute.  String
keys (method names) are mapped to integers with CRC-32.
"""
from __future__ import annotations

import zlib

import numpy as np


def key_of(name: str) -> int:
    """Stable integer key for a string label."""
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, *key: int | str) -> np.random.Generator:
    """Return the generator for ``(seed, key...)``."""
    ints = tuple(key_of(k) if isinstance(k, str) else int(k) for k in key)
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=ints)
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return stream(0)
    return stream(int(rng))
