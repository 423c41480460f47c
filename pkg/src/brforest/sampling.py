"""Bootstrap samplers for ensemble training.

Two flavours: the plain bootstrap (draw n of n with replacement) and the
per-class balanced bootstrap, which draws a fixed number of instances from
each class and is the lever that makes minority classes visible to every
tree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ClassDistribution, Dataset
from .rng import RandomSource

__all__ = [
    "SampleSize",
    "IndexSample",
    "bootstrap",
    "balanced_bootstrap",
    "default_sample_size",
]


@dataclass(frozen=True)
class SampleSize:
    """Per-class draw counts, ordered like the class domain."""

    per_class: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_class", tuple(int(c) for c in self.per_class))
        if not self.per_class:
            raise ValueError("sample size needs at least one class entry")
        if any(c < 1 for c in self.per_class):
            raise ValueError(f"per-class sample sizes must be >= 1, got {self.per_class}")

    @property
    def total(self) -> int:
        return sum(self.per_class)


@dataclass(frozen=True, eq=False)
class IndexSample:
    """Ordered multiset of instance indices drawn for one tree."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.intp)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)


def _bootstrap_indices(n: int, rng: RandomSource) -> np.ndarray:
    return rng.gen.integers(0, n, size=n)


def _balanced_indices(
    codes: np.ndarray, per_class: tuple[int, ...], rng: RandomSource
) -> np.ndarray:
    parts = []
    for c, count in enumerate(per_class):
        members = np.flatnonzero(codes == c)
        if members.size == 0:
            raise ValueError(
                f"class {c} has no instances but a sample size of {count}"
            )
        parts.append(members[rng.gen.integers(0, members.size, size=count)])
    return np.concatenate(parts)


def bootstrap(d: Dataset, rng: RandomSource) -> IndexSample:
    """Draw |d| instance indices uniformly with replacement."""
    n = d.n_instances
    if n == 0:
        raise ValueError("cannot bootstrap an empty dataset")
    return IndexSample(_bootstrap_indices(n, rng))


def balanced_bootstrap(d: Dataset, s: SampleSize, rng: RandomSource) -> IndexSample:
    """Draw s_c indices with replacement from each class c.

    The result is grouped by class (class 0 draws first), each group in
    draw order; the class counts are exact for every seed.
    """
    labels = d.class_labels
    if len(s.per_class) != len(labels):
        raise ValueError(
            f"sample size has {len(s.per_class)} entries for {len(labels)} classes"
        )
    codes = d.class_codes
    try:
        return IndexSample(_balanced_indices(codes, s.per_class, rng))
    except ValueError as e:
        # name the class label rather than its index
        for c, count in enumerate(s.per_class):
            if count > 0 and not (codes == c).any():
                raise ValueError(
                    f"class {labels[c]!r} has no instances but a sample size of {count}"
                ) from None
        raise


def default_sample_size(dist: ClassDistribution) -> SampleSize:
    """Every class gets the minority-class count (under-samples the rest)."""
    if any(c == 0 for c in dist.counts):
        empty = dist.labels[dist.counts.index(0)]
        raise ValueError(f"class {empty!r} has no instances")
    m = min(dist.counts)
    return SampleSize((m,) * len(dist.counts))
