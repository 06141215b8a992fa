"""Deterministic counter-based random streams.

Every stochastic stage in the pipeline draws from an ``RngStream`` addressed
by a (seed, substream) pair.  The underlying bit generator is Philox, which is
keyed rather than stateful, so the draw sequence depends only on the key and
not on scheduling or worker count.  Per-record substreams (``child(i)``) make
parallel dataset augmentation byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    """One splitmix64 scrambling round (public-domain constants)."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Address of an independent random stream: 64-bit seed plus substream id.

    Identical (seed, substream) pairs yield identical draw sequences on all
    platforms.  ``child(i)`` derives a new substream deterministically, so a
    tree of streams can be rebuilt from the root seed alone.
    """

    seed: int
    substream: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if not 0 <= self.substream <= _MASK64:
            raise ValueError(f"substream must fit in 64 bits, got {self.substream}")

    def child(self, index: int) -> "RngStream":
        """Derive the index-th sub-stream of this stream."""
        if index < 0:
            raise ValueError("substream index must be non-negative")
        mixed = _splitmix64(((self.substream + 1) * _GOLDEN + index) & _MASK64)
        return RngStream(self.seed, mixed)

    def generator(self) -> np.random.Generator:
        """A fresh Generator positioned at the start of this stream."""
        key = np.array([self.seed, self.substream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))
