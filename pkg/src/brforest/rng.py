"""Seedable deterministic random source.

One master seed fully determines every random decision in the package.
Derived streams (one per tree, one per fold) are obtained by mixing the
master seed with an index path through ``numpy.random.SeedSequence`` spawn
keys, so results do not depend on training order or worker count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RandomSource", "derive_seed"]


class RandomSource:
    """A PCG64 generator keyed by (seed, derivation path).

    The same (seed, path) pair always yields an identical draw stream.
    Instances are single-owner: hand each worker its own child, never a
    shared one.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._sequence = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self.gen = np.random.Generator(np.random.PCG64(self._sequence))

    def child(self, index: int) -> "RandomSource":
        """Derive the stream for sub-task `index` (distinct per index)."""
        return RandomSource(self.seed, self.path + (int(index),))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, path={self.path})"


def derive_seed(seed: int, *path: int) -> int:
    """Mix a master seed with an index path into a fresh 64-bit seed."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, np.uint64)[0])
