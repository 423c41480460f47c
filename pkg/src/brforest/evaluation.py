"""Cross-validated evaluation with per-class true-positive rates.

The headline numbers for a two-class problem: TPR of the majority class,
TPR of the minority class, the overall correct-classification rate (CCR),
and the unweighted mean of the two TPRs, which is the metric that stays
honest when classes are imbalanced. All are percentages from a single
confusion matrix pooled over every held-out fold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset, class_distribution
from .forest import ForestParams, predict_batch, train_forest
from .rng import RandomSource, derive_seed

__all__ = [
    "FoldAssignment",
    "ConfusionMatrix",
    "MetricsReport",
    "BenchmarkRow",
    "stratified_folds",
    "plain_folds",
    "confusion",
    "metrics",
    "cross_validate",
    "benchmark",
]


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Per-instance fold index in [0, k)."""

    fold_of: np.ndarray
    k: int

    def __post_init__(self):
        fold_of = np.ascontiguousarray(self.fold_of, dtype=np.intp)
        fold_of.setflags(write=False)
        object.__setattr__(self, "fold_of", fold_of)
        if self.k < 2:
            raise ValueError("need at least 2 folds")
        present = np.bincount(self.fold_of, minlength=self.k)
        if (present == 0).any():
            raise ValueError("every fold must be non-empty")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[actual][predicted] over a fixed class-label ordering."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        k = len(self.labels)
        if counts.shape != (k, k):
            raise ValueError(f"counts must be {k}x{k}")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    """Percent metrics plus the confusion matrix they derive from."""

    tpr_majority: float
    tpr_minority: float
    ccr: float
    tpr_avg: float
    confusion: ConfusionMatrix
    minority_index: int
    num_trees: int = 0
    system_label: str = ""


@dataclass(frozen=True)
class BenchmarkRow:
    dataset: str
    report: MetricsReport


def stratified_folds(d: Dataset, k: int, rng: RandomSource) -> FoldAssignment:
    """Shuffle within each class and deal round-robin, so per-fold class
    counts are within one of exact proportionality."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    codes = d.class_codes
    for c, label in enumerate(d.class_labels):
        count = int((codes == c).sum())
        if count < k:
            raise ValueError(
                f"class {label!r} has {count} instances, fewer than {k} folds"
            )
    fold_of = np.empty(d.n_instances, dtype=np.intp)
    for c in range(len(d.class_labels)):
        members = np.flatnonzero(codes == c)
        perm = rng.gen.permutation(members)
        fold_of[perm] = np.arange(members.size) % k
    return FoldAssignment(fold_of, k)


def plain_folds(d: Dataset, k: int, rng: RandomSource) -> FoldAssignment:
    """Unstratified variant: one global shuffle dealt round-robin."""
    if d.n_instances < k:
        raise ValueError(f"{d.n_instances} instances cannot fill {k} folds")
    perm = rng.gen.permutation(d.n_instances)
    fold_of = np.empty(d.n_instances, dtype=np.intp)
    fold_of[perm] = np.arange(d.n_instances) % k
    return FoldAssignment(fold_of, k)


def confusion(predictions, truth, labels: tuple[str, ...] | None = None) -> ConfusionMatrix:
    """Tally counts[actual][predicted].

    Inputs may be class labels or integer codes; `labels` fixes the class
    ordering (defaults to the sorted distinct values seen).
    """
    preds = list(predictions)
    actual = list(truth)
    if len(preds) != len(actual):
        raise ValueError(f"{len(preds)} predictions for {len(actual)} truths")
    if not preds:
        raise ValueError("nothing to tally")
    if labels is None:
        labels = tuple(sorted({str(v) for v in preds} | {str(v) for v in actual}))
    index = {label: i for i, label in enumerate(labels)}

    def code(v):
        if isinstance(v, str):
            if v not in index:
                raise ValueError(f"label {v!r} not in {labels}")
            return index[v]
        i = int(v)
        if not 0 <= i < len(labels):
            raise ValueError(f"class code {i} out of range")
        return i

    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, a in zip(preds, actual):
        counts[code(a), code(p)] += 1
    return ConfusionMatrix(labels, counts)


def metrics(
    cm: ConfusionMatrix,
    minority: int,
    num_trees: int = 0,
    system_label: str = "",
) -> MetricsReport:
    """Percent TPRs, CCR, and their unweighted mean for a two-class matrix."""
    if len(cm.labels) != 2:
        raise ValueError("metrics are defined for exactly two classes")
    if not 0 <= minority < 2:
        raise ValueError("minority must be a class index (0 or 1)")
    actual = cm.counts.sum(axis=1)
    for c, label in enumerate(cm.labels):
        if actual[c] == 0:
            raise ValueError(f"class {label!r} has zero actual instances")
    tpr = [float(100.0 * cm.counts[c, c] / actual[c]) for c in range(2)]
    ccr = float(100.0 * (cm.counts[0, 0] + cm.counts[1, 1]) / cm.total)
    majority = 1 - minority
    tpr_avg = (tpr[majority] + tpr[minority]) / 2.0
    # ccr must equal the prevalence-weighted TPR mean; guards tally bugs
    weighted = sum(float(actual[c]) / cm.total * tpr[c] for c in range(2))
    assert math.isclose(ccr, weighted, rel_tol=1e-9, abs_tol=1e-9)
    return MetricsReport(
        tpr_majority=tpr[majority],
        tpr_minority=tpr[minority],
        ccr=ccr,
        tpr_avg=tpr_avg,
        confusion=cm,
        minority_index=minority,
        num_trees=num_trees,
        system_label=system_label,
    )


def cross_validate(
    d: Dataset,
    p: ForestParams,
    k: int = 10,
    seed: int = 0,
    workers: int = 1,
    stratified: bool = True,
) -> MetricsReport:
    """k-fold cross-validation with a pooled confusion matrix.

    Every fold trains its own forest (seed derived from the fold index)
    on the other folds, imputing from them alone, and predicts the held
    out instances exactly once. The minority class is the smaller class
    of the full dataset.
    """
    labels = d.class_labels
    if len(labels) != 2:
        raise ValueError(f"cross-validation needs 2 class labels, got {len(labels)}")
    dist = class_distribution(d)
    minority = dist.minority_index
    make_folds = stratified_folds if stratified else plain_folds
    assignment = make_folds(d, k, RandomSource(seed))

    y = d.class_codes
    counts = np.zeros((2, 2), dtype=np.int64)
    for fold in range(k):
        held_out = assignment.fold_of == fold
        train_ds = d.subset(np.flatnonzero(~held_out))
        fold_params = replace(p, master_seed=derive_seed(seed, fold))
        model = train_forest(train_ds, fold_params, workers=workers)
        test_rows = np.flatnonzero(held_out)
        preds, _ = predict_batch(model, d.values[test_rows])
        np.add.at(counts, (y[test_rows], preds), 1)
    cm = ConfusionMatrix(labels, counts)
    return metrics(cm, minority, num_trees=p.num_trees, system_label=p.system_label)


def benchmark(
    datasets: list[Dataset],
    tree_counts=(20, 100, 2000),
    systems=("BRF", "RF"),
    k: int = 10,
    seed: int = 0,
    workers: int = 1,
    mtry: int | None = None,
    min_leaf: int = 1,
    stratified: bool = True,
) -> list[BenchmarkRow]:
    """Cross product dataset x system x tree count, one CV report per row.

    All rows of one dataset share the same seed, hence the same folds, so
    system comparisons are paired.
    """
    for system in systems:
        if system not in ("RF", "BRF"):
            raise ValueError(f"unknown system {system!r} (expected RF or BRF)")
    rows: list[BenchmarkRow] = []
    for d in datasets:
        for system in systems:
            for trees in tree_counts:
                p = ForestParams(
                    num_trees=int(trees),
                    balanced=system == "BRF",
                    mtry=mtry,
                    min_leaf=min_leaf,
                    master_seed=seed,
                )
                report = cross_validate(
                    d, p, k=k, seed=seed, workers=workers, stratified=stratified
                )
                rows.append(BenchmarkRow(d.name, report))
    return rows
