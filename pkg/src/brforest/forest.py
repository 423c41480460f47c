"""Tree ensembles: training, plurality-vote prediction, OOB error, model IO.

Training is deterministic for fixed inputs regardless of worker count:
tree i draws from a child stream keyed by (master_seed, i) and results are
assembled in tree order. Setting a per-class sample size switches the
sampler from the plain bootstrap to the balanced per-class bootstrap.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dataset import (
    AttributeSpec,
    Dataset,
    ImputationStats,
    apply_imputation,
    class_distribution,
    compute_imputation_stats,
)
from .errors import ModelFormatError, SchemaError
from .rng import RandomSource
from .sampling import SampleSize, _balanced_indices, _bootstrap_indices, default_sample_size
from .tree import (
    DecisionTree,
    TreeParams,
    _batch_hard_predict,
    _dataset_arrays,
    _grow,
    default_mtry,
    tree_from_records,
    tree_to_records,
)

__all__ = [
    "ForestParams",
    "ForestModel",
    "OobReport",
    "train_forest",
    "predict",
    "predict_batch",
    "oob_error",
    "serialize_model",
    "deserialize_model",
]

MODEL_FORMAT = "brforest-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    """Knobs for one ensemble.

    `balanced` without an explicit `sample_size` defaults every class to
    the training data's minority-class count. An explicit `sample_size`
    implies balanced mode; leaving both unset gives the plain bootstrap.
    """

    num_trees: int
    balanced: bool = False
    sample_size: SampleSize | None = None
    mtry: int | None = None
    min_leaf: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.sample_size is not None and not self.balanced:
            object.__setattr__(self, "balanced", True)

    @property
    def system_label(self) -> str:
        return "BRF" if self.balanced else "RF"


@dataclass(eq=False)
class ForestModel:
    """A trained ensemble plus everything needed to reuse it."""

    trees: list[DecisionTree]
    params: ForestParams  # fully resolved: mtry and sample_size made concrete
    attributes: tuple[AttributeSpec, ...]
    class_index: int
    n_training: int
    oob_indices: list[np.ndarray]  # per tree: sorted indices not in its sample
    imputation_stats: ImputationStats

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.attributes[self.class_index].domain


@dataclass(frozen=True)
class OobReport:
    overall_error: float
    per_class_error: tuple[float, ...]  # NaN for a class no tree left out
    evaluated: int
    skipped: int


# -- training ----------------------------------------------------------------


def _grow_chunk(task) -> list[tuple[list[dict], np.ndarray]]:
    """Grow a batch of trees; runs in the main process or a worker.

    Returns (flat node records, sorted OOB indices) per tree so results
    pickle cheaply and identically either way.
    """
    (X, y, k, cat_sizes, features, per_class, mtry, min_leaf, master_seed, tree_ids) = task
    n = X.shape[0]
    out = []
    for i in tree_ids:
        rng = RandomSource(master_seed, (int(i),))
        if per_class is None:
            sample = _bootstrap_indices(n, rng)
        else:
            sample = _balanced_indices(y, per_class, rng)
        tree = _grow(X, y, k, cat_sizes, features, sample, mtry, min_leaf, rng)
        oob = np.setdiff1d(np.arange(n), sample)
        out.append((tree_to_records(DecisionTree(tree, None, k)), oob))
    return out


def train_forest(d: Dataset, p: ForestParams, workers: int = 1) -> ForestModel:
    """Train an ensemble on a two-class dataset.

    Missing cells are imputed with the dataset's own means/modes and the
    fill values are frozen into the model so prediction treats missing
    data exactly like training did.
    """
    labels = d.class_labels
    if len(labels) > 2:
        raise ValueError(
            f"training supports exactly 2 class labels, dataset has {len(labels)}"
        )
    if len(labels) < 2:
        raise ValueError("training needs a two-label class attribute")
    dist = class_distribution(d)
    for label, count in zip(labels, dist.counts):
        if count == 0:
            raise ValueError(f"class {label!r} has no instances")

    # neutral fill keeps training alive when a fold loses a sparse column
    stats = compute_imputation_stats(d, on_empty="neutral")
    imputed = apply_imputation(d, stats)

    sample_size = p.sample_size
    if sample_size is None and p.balanced:
        sample_size = default_sample_size(dist)
    if sample_size is not None and len(sample_size.per_class) != len(labels):
        raise ValueError(
            f"sample size has {len(sample_size.per_class)} entries "
            f"for {len(labels)} classes"
        )

    X, y, cat_sizes, features = _dataset_arrays(imputed)
    mtry = p.mtry if p.mtry is not None else default_mtry(features.size)
    if not 1 <= mtry <= features.size:
        raise ValueError(f"mtry={mtry} must be in [1, {features.size}]")
    resolved = replace(p, balanced=sample_size is not None,
                       sample_size=sample_size, mtry=mtry)

    per_class = sample_size.per_class if sample_size is not None else None
    base = (X, y, len(labels), cat_sizes, features, per_class,
            mtry, p.min_leaf, p.master_seed)
    tree_ids = list(range(p.num_trees))
    if workers <= 1 or p.num_trees == 1:
        chunk_results = [_grow_chunk(base + (tree_ids,))]
    else:
        step = max(1, -(-p.num_trees // (workers * 4)))
        chunks = [tree_ids[i : i + step] for i in range(0, p.num_trees, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(_grow_chunk, [base + (c,) for c in chunks]))

    tree_params = TreeParams(mtry=mtry, min_leaf=p.min_leaf, seed=p.master_seed)
    trees: list[DecisionTree] = []
    oob: list[np.ndarray] = []
    for result in chunk_results:
        for records, oob_i in result:
            trees.append(tree_from_records(records, tree_params, len(labels)))
            oob.append(np.asarray(oob_i, dtype=np.intp))
    return ForestModel(
        trees, resolved, d.attributes, d.class_index, d.n_instances, oob, stats
    )


# -- prediction ----------------------------------------------------------------


def _check_instance_matrix(m: ForestModel, X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != len(m.attributes):
        raise SchemaError(
            f"expected {len(m.attributes)} attribute values per instance, "
            f"got shape {X.shape}"
        )
    for j, attr in enumerate(m.attributes):
        if attr.kind != "nominal" or j == m.class_index:
            continue
        col = X[:, j]
        codes = col[~np.isnan(col)]
        if codes.size and (codes.min() < 0 or codes.max() >= len(attr.domain)):
            raise SchemaError(
                f"attribute {attr.name!r}: category index outside the trained domain"
            )


def _fill_matrix(m: ForestModel, X: np.ndarray) -> np.ndarray:
    out = np.array(X, dtype=np.float64, copy=True)
    fill = np.asarray(m.imputation_stats.fill)
    for j in range(out.shape[1]):
        mask = np.isnan(out[:, j])
        if mask.any():
            out[mask, j] = fill[j]
    return out


def predict_batch(m: ForestModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Plurality-vote class codes and vote counts for a matrix of instances.

    Missing cells are filled from the model's stored imputation fills; the
    class column, if meaningful in `X`, is ignored by every tree.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    _check_instance_matrix(m, X)
    filled = _fill_matrix(m, X)
    k = len(m.class_labels)
    votes = np.zeros((filled.shape[0], k), dtype=np.int64)
    row_ids = np.arange(filled.shape[0])
    for tree in m.trees:
        votes[row_ids, _batch_hard_predict(tree, filled)] += 1
    # first argmax keeps the lowest class index on ties
    codes = np.argmax(votes, axis=1)
    if single:
        return codes[0], votes[0]
    return codes, votes


def predict(m: ForestModel, x) -> tuple[str, np.ndarray]:
    """Predict one instance; returns (class label, per-class vote counts)."""
    code, votes = predict_batch(m, np.asarray(x, dtype=np.float64))
    return m.class_labels[int(code)], votes


# -- out-of-bag error ----------------------------------------------------------


def oob_error(m: ForestModel, d: Dataset) -> OobReport:
    """Misclassification rate using, per instance, only trees that did not
    train on it. Instances covered by zero trees are skipped and counted."""
    if d.n_instances != m.n_training:
        raise ValueError(
            f"dataset has {d.n_instances} instances, model recorded {m.n_training}"
        )
    filled = _fill_matrix(m, d.values)
    k = len(m.class_labels)
    votes = np.zeros((d.n_instances, k), dtype=np.int64)
    for tree, oob in zip(m.trees, m.oob_indices):
        if oob.size == 0:
            continue
        votes[oob, _batch_hard_predict(tree, filled[oob])] += 1
    covered = votes.sum(axis=1) > 0
    y = d.class_codes
    preds = np.argmax(votes[covered], axis=1)
    truth = y[covered]
    overall = float(np.mean(preds != truth)) if truth.size else float("nan")
    per_class = []
    for c in range(k):
        in_class = truth == c
        per_class.append(
            float(np.mean(preds[in_class] != c)) if in_class.any() else float("nan")
        )
    return OobReport(
        overall_error=overall,
        per_class_error=tuple(per_class),
        evaluated=int(covered.sum()),
        skipped=int((~covered).sum()),
    )


# -- serialization ----------------------------------------------------------------


def serialize_model(m: ForestModel) -> str:
    """Render a model as a versioned, self-describing JSON text document."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "schema": {
            "attributes": [
                {"name": a.name, "kind": a.kind, "domain": list(a.domain)}
                for a in m.attributes
            ],
            "class_index": m.class_index,
        },
        "params": {
            "num_trees": m.params.num_trees,
            "balanced": m.params.balanced,
            "sample_size": list(m.params.sample_size.per_class)
            if m.params.sample_size
            else None,
            "mtry": m.params.mtry,
            "min_leaf": m.params.min_leaf,
            "master_seed": m.params.master_seed,
        },
        "n_training": m.n_training,
        "imputation": {"fill": list(m.imputation_stats.fill)},
        "oob": [[int(i) for i in oob] for oob in m.oob_indices],
        "trees": [{"nodes": tree_to_records(t)} for t in m.trees],
    }
    return json.dumps(doc, separators=(",", ":"))


def deserialize_model(text: str) -> ForestModel:
    """Parse a model document; errors on truncation or version mismatch."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"model document is truncated or malformed: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a forest model document")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')!r}; "
            f"this build reads version {MODEL_VERSION}"
        )
    try:
        schema = doc["schema"]
        attributes = tuple(
            AttributeSpec(a["name"], a["kind"], tuple(a["domain"]))
            for a in schema["attributes"]
        )
        class_index = int(schema["class_index"])
        raw = doc["params"]
        params = ForestParams(
            num_trees=int(raw["num_trees"]),
            balanced=bool(raw["balanced"]),
            sample_size=SampleSize(tuple(raw["sample_size"]))
            if raw["sample_size"] is not None
            else None,
            mtry=int(raw["mtry"]),
            min_leaf=int(raw["min_leaf"]),
            master_seed=int(raw["master_seed"]),
        )
        n_training = int(doc["n_training"])
        stats = ImputationStats(tuple(float(v) for v in doc["imputation"]["fill"]))
        oob = [np.asarray(o, dtype=np.intp) for o in doc["oob"]]
        k = len(attributes[class_index].domain)
        tree_params = TreeParams(mtry=params.mtry, min_leaf=params.min_leaf,
                                 seed=params.master_seed)
        trees = [
            tree_from_records(t["nodes"], tree_params, k) for t in doc["trees"]
        ]
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ModelFormatError(f"model document is malformed: {e}") from e
    if len(trees) != params.num_trees or len(oob) != params.num_trees:
        raise ModelFormatError("tree count does not match params.num_trees")
    model = ForestModel(trees, params, attributes, class_index, n_training, oob, stats)
    _validate_trees(model)
    return model


def _validate_trees(m: ForestModel) -> None:
    n_attrs = len(m.attributes)
    k = len(m.class_labels)
    from .tree import Leaf, NominalSplit, NumericSplit  # local to avoid cycle noise

    for t, tree in enumerate(m.trees):
        stack = [tree.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                if node.counts.shape != (k,):
                    raise ModelFormatError(f"tree {t}: leaf counts must have {k} entries")
                continue
            if not 0 <= node.feature < n_attrs or node.feature == m.class_index:
                raise ModelFormatError(f"tree {t}: bad split feature {node.feature}")
            attr = m.attributes[node.feature]
            if isinstance(node, NumericSplit):
                if attr.kind != "numeric" or not np.isfinite(node.threshold):
                    raise ModelFormatError(f"tree {t}: bad numeric split on {attr.name!r}")
            elif isinstance(node, NominalSplit):
                if attr.kind != "nominal" or len(node.children) != len(attr.domain):
                    raise ModelFormatError(f"tree {t}: bad nominal split on {attr.name!r}")
            stack.extend(node.children)


def check_schema(m: ForestModel, attributes: tuple[AttributeSpec, ...]) -> None:
    """Raise SchemaError naming the first attribute that differs."""
    if len(attributes) != len(m.attributes):
        raise SchemaError(
            f"model has {len(m.attributes)} attributes, data has {len(attributes)}"
        )
    for ours, theirs in zip(m.attributes, attributes):
        if ours != theirs:
            raise SchemaError(
                f"attribute {theirs.name!r} does not match the model's "
                f"{ours.name!r} (kind or domain differs)"
            )
