"""Shared fixtures: hand-built datasets, a synthetic imbalanced generator,
and discovery of the five public benchmark files (skipped when absent)."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from brforest import AttributeSpec, Dataset

TOY_ARFF = """\
% tiny hand-checkable file
@relation toy
@attribute a numeric
@attribute b numeric
@attribute cls {no,yes}
@data
1,2,no
3,?,yes
"""


def dataset_from_rows(attrs, rows, class_index=-1, name="fixture") -> Dataset:
    """Build a Dataset from human-readable cell values.

    Numbers stay numbers, strings are looked up in the nominal domain,
    None becomes a missing cell.
    """
    attrs = tuple(attrs)
    if class_index < 0:
        class_index += len(attrs)
    values = np.empty((len(rows), len(attrs)), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            if cell is None:
                values[i, j] = np.nan
            elif isinstance(cell, str):
                values[i, j] = float(attrs[j].domain.index(cell))
            else:
                values[i, j] = float(cell)
    return Dataset(name, attrs, class_index, values)


def numeric_dataset(X, y, labels=("a", "b"), name="numeric") -> Dataset:
    """Two-class dataset with only numeric features from plain arrays."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    attrs = tuple(
        [AttributeSpec(f"f{j}", "numeric") for j in range(X.shape[1])]
        + [AttributeSpec("cls", "nominal", tuple(labels))]
    )
    values = np.column_stack([X, y.astype(np.float64)])
    return Dataset(name, attrs, X.shape[1], values)


def make_imbalanced(
    n=600,
    minority_frac=0.08,
    n_features=6,
    n_informative=3,
    shift=1.4,
    seed=0,
    missing_rate=0.0,
    nominal=True,
    name="imbalanced",
) -> Dataset:
    """Synthetic two-class data: gaussian features, shifted for the minority.

    The overlap is tuned so plain bootstrap forests under-recall the
    minority while balanced ones do not.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n_min = max(int(round(n * minority_frac)), 5)
    n_maj = n - n_min
    X_maj = rng.normal(0.0, 1.0, size=(n_maj, n_features))
    X_min = rng.normal(0.0, 1.0, size=(n_min, n_features))
    X_min[:, :n_informative] += shift
    X = np.vstack([X_maj, X_min])
    y = np.concatenate([np.zeros(n_maj), np.ones(n_min)])
    perm = rng.permutation(n)
    X, y = X[perm], y[perm]

    attrs = [AttributeSpec(f"f{j}", "numeric") for j in range(n_features)]
    columns = [X[:, j] for j in range(n_features)]
    if nominal:
        # weakly informative 3-category column
        probs = np.where(y == 1, 0.6, 0.2)
        cat = (rng.random(n) < probs).astype(np.float64)
        cat += (rng.random(n) < 0.3) * 2.0 * (cat == 0)
        attrs.append(AttributeSpec("grp", "nominal", ("u", "v", "w")))
        columns.append(cat)
    attrs.append(AttributeSpec("cls", "nominal", ("neg", "pos")))
    columns.append(y)
    values = np.column_stack(columns)
    if missing_rate > 0:
        mask = rng.random(values.shape) < missing_rate
        mask[:, -1] = False
        values[mask] = np.nan
    return Dataset(name, tuple(attrs), len(attrs) - 1, values)


@pytest.fixture
def toy_dataset():
    from brforest import parse_arff

    return parse_arff(TOY_ARFF)


@pytest.fixture
def separable_dataset():
    """One feature fully determines the class."""
    rng = np.random.Generator(np.random.PCG64(7))
    n = 80
    y = (np.arange(n) % 2).astype(float)
    X = np.column_stack([y * 2.0 - 1.0 + rng.normal(0, 0.05, n), rng.normal(0, 1, n)])
    return numeric_dataset(X, y, labels=("lo", "hi"), name="separable")


# -- real benchmark files ---------------------------------------------------

DATASET_FILES = {
    "HY1": ("HY.arff", "hypothyroid.arff"),
    "HY2": ("sick.arff",),
    "ESS": ("SE.arff", "sick-euthyroid.arff"),
    "SPAM": ("spambase.arff",),
    "EG": ("kr-vs-kp.arff",),
}

REFERENCE_STATS = {
    # instances, minority percent, feature count (class excluded)
    "HY1": (3163, 4.77, 25),
    "HY2": (3772, 6.12, 29),
    "ESS": (3163, 9.26, 25),
    "SPAM": (4601, 39.40, 57),
    "EG": (3196, 47.78, 36),
}


def data_dir() -> Path:
    return Path(os.environ.get("BRF_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))


def find_dataset_file(key: str) -> Path | None:
    base = data_dir()
    for candidate in DATASET_FILES[key]:
        path = base / candidate
        if path.exists():
            return path
    return None


def require_dataset_file(key: str) -> Path:
    path = find_dataset_file(key)
    if path is None:
        pytest.skip(
            f"benchmark file for {key} not found; place one of "
            f"{DATASET_FILES[key]} under {data_dir()} (or set BRF_DATA_DIR)"
        )
    return path
