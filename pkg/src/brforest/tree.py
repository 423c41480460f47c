"""Single decision trees: entropy splitting, growth, prediction.

Trees are grown unpruned. At every node a random subset of `mtry`
features is drawn, the best split by information gain (base-2 entropy)
wins, and ties break deterministically by lower attribute index, then
lower threshold. Numeric splits are binary at midpoints between distinct
sorted values; nominal splits are multiway with one branch per category,
and a nominal attribute is never split twice on one path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dataset import NOMINAL, Dataset
from .rng import RandomSource

__all__ = [
    "TreeParams",
    "Leaf",
    "NumericSplit",
    "NominalSplit",
    "DecisionTree",
    "SplitDescription",
    "entropy",
    "information_gain",
    "best_split",
    "grow_tree",
    "predict_tree",
    "default_mtry",
]

# Gains at or below this are treated as zero: float round-off can leave a
# residual of a few ulp on mathematically gain-free partitions.
GAIN_EPS = 1e-12

# Weighted child entropies within this of each other count as tied, so the
# deterministic (attribute, threshold) tie-break decides. Integer count
# configurations can make distinct splits mathematically equal (log-term
# cancellation) while their float expressions differ in the last ulp.
WEIGHTED_TIE_EPS = 1e-9


def default_mtry(n_features: int) -> int:
    """Candidate features per node: floor(log2(F)) + 1."""
    if n_features < 1:
        raise ValueError("need at least one non-class feature")
    return int(np.log2(n_features)) + 1


@dataclass(frozen=True)
class TreeParams:
    mtry: int
    min_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mtry < 1:
            raise ValueError("mtry must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(eq=False)
class Leaf:
    """Terminal node holding the class counts of the training rows it saw."""

    counts: np.ndarray
    hard_class: int = field(init=False)

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        self.counts = counts
        # first argmax keeps the lowest class index on ties
        self.hard_class = int(np.argmax(counts))


@dataclass(eq=False)
class NumericSplit:
    """Binary split: go left iff value <= threshold."""

    feature: int
    threshold: float
    children: list  # [left, right]

    @property
    def left(self):
        return self.children[0]

    @property
    def right(self):
        return self.children[1]


@dataclass(eq=False)
class NominalSplit:
    """Multiway split with one child per domain category."""

    feature: int
    children: list


Node = Leaf | NumericSplit | NominalSplit


@dataclass(eq=False)
class DecisionTree:
    root: Node
    params: TreeParams
    class_count: int


@dataclass(frozen=True)
class SplitDescription:
    feature: int
    kind: str  # "numeric" or "nominal"
    threshold: float | None
    gain: float


# -- entropy and gain ------------------------------------------------------


def entropy(counts) -> float:
    """Shannon entropy in bits of a per-class count vector."""
    arr = np.asarray(counts, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("counts must be a non-empty 1-D vector")
    if (arr < 0).any():
        raise ValueError("counts must be non-negative")
    n = arr.sum()
    if n <= 0:
        raise ValueError("counts must not be all zero")
    p = arr / n
    return float(-(p * np.log2(np.where(p > 0.0, p, 1.0))).sum())


def _entropy_rows(counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Entropy of each row of a (groups x classes) count matrix."""
    p = counts / sizes[:, None]
    return -(p * np.log2(np.where(p > 0.0, p, 1.0))).sum(axis=1)


def information_gain(parent, children) -> float:
    """Entropy reduction of a partition: H(parent) - sum (n_j/n) H(child_j).

    `children` must partition `parent` component-wise; all-zero children
    are allowed and contribute nothing.
    """
    parent = np.asarray(parent, dtype=np.float64)
    kids = [np.asarray(c, dtype=np.float64) for c in children]
    total = np.zeros_like(parent)
    for c in kids:
        if c.shape != parent.shape:
            raise ValueError("child counts must have the parent's shape")
        total = total + c
    if not np.array_equal(total, parent):
        raise ValueError("children do not partition the parent counts")
    n = parent.sum()
    h_parent = entropy(parent)
    sizes = np.array([c.sum() for c in kids])
    nonempty = sizes > 0
    if not nonempty.any():
        return h_parent if n > 0 else 0.0
    h_kids = _entropy_rows(np.stack([c for c, ok in zip(kids, nonempty) if ok]),
                           sizes[nonempty])
    gain = h_parent - float((sizes[nonempty] * h_kids).sum()) / n
    return max(gain, 0.0)


# -- split search ----------------------------------------------------------


def _xlog2x_table(size: int) -> np.ndarray:
    """table[i] = i * log2(i), with table[0] = 0.

    Split search runs on integer class counts, so weighted child entropies
    reduce to sums of table lookups: n_l*H_l + n_r*H_r =
    (table[n_l] + table[n_r]) - sum_c (table[l_c] + table[r_c]).
    Shared table entries keep mathematically tied splits bit-identical.
    """
    idx = np.arange(size, dtype=np.float64)
    return idx * np.log2(np.where(idx > 0.0, idx, 1.0))


@njit(cache=True)
def _scan_node(block, cand_cats, y_node, counts, table, gain_eps, tie_eps):
    """Best split over one node's candidate columns (compiled hot path).

    Splits compare by weighted child entropy, which orders identically to
    information gain; smaller is better. Values within tie_eps count as
    tied, and scanning candidates ascending with thresholds ascending
    resolves ties to the lowest attribute, lowest threshold.

    Returns (candidate slot or -1, is_nominal, threshold, weighted, parent
    weighted entropy).
    """
    m, n_cands = block.shape
    k = counts.shape[0]
    s = 0.0
    for c in range(k):
        s += table[counts[c]]
    w_parent = table[m] - s
    cutoff = w_parent - m * gain_eps  # "gain > eps" at the weighted scale
    best_t = -1
    best_nominal = False
    best_thr = 0.0
    best_w = 0.0
    wbuf = np.empty(m - 1, np.float64)
    posbuf = np.empty(m - 1, np.int64)
    lcount = np.zeros(k, np.int64)
    max_cat = int(np.max(cand_cats))
    cc = np.zeros((max_cat if max_cat > 0 else 1, k), np.int64)

    for t in range(n_cands):
        ncat = int(cand_cats[t])
        if ncat == 0:
            col = np.ascontiguousarray(block[:, t])
            order = np.argsort(col)
            if col[order[0]] == col[order[m - 1]]:
                continue
            for c in range(k):
                lcount[c] = 0
            nb = 0
            wmin = np.inf
            for i in range(m - 1):
                lcount[y_node[order[i]]] += 1
                if col[order[i]] != col[order[i + 1]]:
                    sl = 0.0
                    sr = 0.0
                    for c in range(k):
                        sl += table[lcount[c]]
                        sr += table[counts[c] - lcount[c]]
                    w = (table[i + 1] + table[m - i - 1]) - (sl + sr)
                    wbuf[nb] = w
                    posbuf[nb] = i
                    nb += 1
                    if w < wmin:
                        wmin = w
            # first boundary inside the tie zone = lowest tied threshold
            sel = 0
            for b in range(nb):
                if wbuf[b] <= wmin + tie_eps:
                    sel = b
                    break
            w = wbuf[sel]
            if w < cutoff and (best_t < 0 or w < best_w - tie_eps):
                i = posbuf[sel]
                lo = col[order[i]]
                hi = col[order[i + 1]]
                thr = (lo + hi) / 2.0
                if not (lo <= thr < hi):  # adjacent floats: fall back to "<= lo"
                    thr = lo
                best_t = t
                best_nominal = False
                best_thr = thr
                best_w = w
        else:
            for j in range(ncat):
                for c in range(k):
                    cc[j, c] = 0
            for i in range(m):
                cc[int(block[i, t]), y_node[i]] += 1
            nonempty = 0
            for j in range(ncat):
                size_j = 0
                for c in range(k):
                    size_j += cc[j, c]
                if size_j > 0:
                    nonempty += 1
            if nonempty < 2:
                continue
            ssum = 0.0
            ccsum = 0.0
            for j in range(ncat):
                size_j = 0
                for c in range(k):
                    size_j += cc[j, c]
                    ccsum += table[cc[j, c]]
                ssum += table[size_j]
            w = ssum - ccsum
            if w < cutoff and (best_t < 0 or w < best_w - tie_eps):
                best_t = t
                best_nominal = True
                best_thr = 0.0
                best_w = w
    return best_t, best_nominal, best_thr, best_w, w_parent


def _find_best_split(
    X: np.ndarray,
    y_node: np.ndarray,
    rows: np.ndarray,
    candidates: np.ndarray,
    cat_sizes: np.ndarray,
    k: int,
    counts: np.ndarray,
    table: np.ndarray,
) -> SplitDescription | None:
    """Best split over `candidates` (must be in ascending order)."""
    block = X[np.ix_(rows, candidates)]
    cand_cats = cat_sizes[candidates]
    t, is_nominal, thr, w, w_parent = _scan_node(
        block, cand_cats, y_node, counts, table, GAIN_EPS, WEIGHTED_TIE_EPS
    )
    if t < 0:
        return None
    feature = int(candidates[t])
    gain = (w_parent - w) / rows.size
    if is_nominal:
        return SplitDescription(feature, "nominal", None, gain)
    return SplitDescription(feature, "numeric", thr, gain)


def _dataset_arrays(d: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    cat_sizes = np.array(
        [len(a.domain) if a.kind == NOMINAL else 0 for a in d.attributes], dtype=np.int64
    )
    features = np.array(d.feature_indices, dtype=np.intp)
    return d.values, d.class_codes, cat_sizes, features


def best_split(d: Dataset, rows, candidates) -> SplitDescription | None:
    """Best information-gain split of `rows` among candidate features.

    Returns None when the rows are class-pure or no candidate yields a
    positive gain. The dataset must already be imputed.
    """
    X, y, cat_sizes, _ = _dataset_arrays(d)
    rows = np.asarray(rows, dtype=np.intp)
    candidates = np.sort(np.asarray(candidates, dtype=np.intp))
    if rows.size == 0:
        raise ValueError("rows must be non-empty")
    if candidates.size == 0:
        raise ValueError("candidates must be non-empty")
    if d.class_index in candidates:
        raise ValueError("the class attribute cannot be a split candidate")
    if np.isnan(X[np.ix_(rows, candidates)]).any():
        raise ValueError("dataset must be imputed before split search")
    k = len(d.class_labels)
    y_node = y[rows]
    counts = np.bincount(y_node, minlength=k)
    table = _xlog2x_table(rows.size + 1)
    return _find_best_split(X, y_node, rows, candidates, cat_sizes, k, counts, table)


# -- growth ----------------------------------------------------------------


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    k: int,
    cat_sizes: np.ndarray,
    features: np.ndarray,
    sample: np.ndarray,
    mtry: int,
    min_leaf: int,
    rng: RandomSource,
) -> Node:
    """Iterative depth-first growth (left child first)."""
    root_box: list = [None]
    no_used = np.zeros(X.shape[1], dtype=bool)
    sample = np.asarray(sample, dtype=np.intp)
    table = _xlog2x_table(sample.size + 1)
    stack: list = [(sample, no_used, root_box, 0)]
    while stack:
        rows, used, container, slot = stack.pop()
        y_node = y[rows]
        counts = np.bincount(y_node, minlength=k)
        split = None
        if rows.size >= 2 * min_leaf and np.count_nonzero(counts) >= 2:
            eligible = features[~used[features]]
            if eligible.size:
                if eligible.size > mtry:
                    cands = np.sort(rng.gen.choice(eligible, size=mtry, replace=False))
                else:
                    cands = eligible
                split = _find_best_split(X, y_node, rows, cands, cat_sizes, k, counts, table)
        if split is None:
            container[slot] = Leaf(counts)
            continue
        if split.kind == "numeric":
            mask = X[rows, split.feature] <= split.threshold
            left_rows, right_rows = rows[mask], rows[~mask]
            if left_rows.size == 0 or right_rows.size == 0:
                container[slot] = Leaf(counts)
                continue
            node = NumericSplit(split.feature, split.threshold, [None, None])
            container[slot] = node
            stack.append((right_rows, used, node.children, 1))
            stack.append((left_rows, used, node.children, 0))
        else:
            ncat = int(cat_sizes[split.feature])
            codes = X[rows, split.feature].astype(np.int64)
            node = NominalSplit(split.feature, [None] * ncat)
            container[slot] = node
            child_used = used.copy()
            child_used[split.feature] = True
            for c in range(ncat - 1, -1, -1):
                child_rows = rows[codes == c]
                if child_rows.size == 0:
                    # category unseen here: fall back to this node's distribution
                    node.children[c] = Leaf(counts)
                else:
                    stack.append((child_rows, child_used, node.children, c))
    return root_box[0]


def grow_tree(
    d: Dataset, sample, params: TreeParams, rng: RandomSource | None = None
) -> DecisionTree:
    """Grow one unpruned tree from the given bootstrap sample.

    When `rng` is omitted a fresh source is built from `params.seed`;
    either way (dataset, sample, params, seed) fully determine the tree.
    """
    X, y, cat_sizes, features = _dataset_arrays(d)
    sample = np.asarray(getattr(sample, "indices", sample), dtype=np.intp)
    if sample.size == 0:
        raise ValueError("sample must be non-empty")
    if sample.min() < 0 or sample.max() >= d.n_instances:
        raise ValueError("sample indices out of range")
    if not 1 <= params.mtry <= features.size:
        raise ValueError(
            f"mtry={params.mtry} must be in [1, {features.size}] for this dataset"
        )
    if np.isnan(X).any():
        raise ValueError("dataset must be imputed before growing trees")
    if rng is None:
        rng = RandomSource(params.seed)
    k = len(d.class_labels)
    root = _grow(X, y, k, cat_sizes, features, sample, params.mtry, params.min_leaf, rng)
    return DecisionTree(root, params, k)


# -- prediction --------------------------------------------------------------


def predict_tree(t: DecisionTree, x) -> np.ndarray:
    """Route one imputed instance to a leaf; returns class proportions.

    The hard prediction is the argmax (lowest class index on ties).
    """
    x = np.asarray(x, dtype=np.float64)
    node = t.root
    while not isinstance(node, Leaf):
        v = x[node.feature]
        if np.isnan(v):
            raise ValueError(f"attribute {node.feature} is missing; impute first")
        if isinstance(node, NumericSplit):
            node = node.left if v <= node.threshold else node.right
        else:
            code = int(v)
            if not 0 <= code < len(node.children):
                raise ValueError(
                    f"attribute {node.feature}: category index {code} outside "
                    "the trained domain"
                )
            node = node.children[code]
    return node.counts / node.counts.sum()


def _batch_hard_predict(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Hard class votes for every row of an imputed matrix."""
    out = np.empty(X.shape[0], dtype=np.intp)
    stack: list = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] = node.hard_class
        elif isinstance(node, NumericSplit):
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        else:
            codes = X[idx, node.feature].astype(np.int64)
            for c, child in enumerate(node.children):
                stack.append((child, idx[codes == c]))
    return out


# -- flat record form (serialization and cross-process transport) -----------


def tree_to_records(tree: DecisionTree) -> list[dict]:
    """Flatten a tree into a list of node records; index 0 is the root.

    Children are referenced by record index, which keeps both encoding and
    decoding iterative no matter how deep the tree is.
    """
    order: list[Node] = []
    ids: dict[int, int] = {}
    stack = [tree.root]
    while stack:
        node = stack.pop()
        ids[id(node)] = len(order)
        order.append(node)
        if not isinstance(node, Leaf):
            stack.extend(reversed(node.children))
    records: list[dict] = []
    for node in order:
        if isinstance(node, Leaf):
            records.append({"counts": [int(c) for c in node.counts]})
        elif isinstance(node, NumericSplit):
            records.append(
                {
                    "feature": node.feature,
                    "threshold": node.threshold,
                    "children": [ids[id(c)] for c in node.children],
                }
            )
        else:
            records.append(
                {
                    "feature": node.feature,
                    "children": [ids[id(c)] for c in node.children],
                }
            )
    return records


def tree_from_records(records: list[dict], params: TreeParams, class_count: int) -> DecisionTree:
    """Rebuild a tree from its flat record form.

    Children must point strictly forward and be referenced once, which
    rules out cycles in hand-edited or corrupted documents.
    """
    if not records:
        raise ValueError("tree needs at least one node record")
    nodes: list[Node] = []
    for rec in records:
        if "counts" in rec:
            nodes.append(Leaf(np.asarray(rec["counts"], dtype=np.int64)))
        elif "threshold" in rec:
            nodes.append(NumericSplit(int(rec["feature"]), float(rec["threshold"]), []))
        else:
            nodes.append(NominalSplit(int(rec["feature"]), []))
    seen = np.zeros(len(records), dtype=bool)
    seen[0] = True
    for parent, (rec, node) in enumerate(zip(records, nodes)):
        if isinstance(node, Leaf):
            continue
        for i in rec["children"]:
            if not parent < i < len(records) or seen[i]:
                raise ValueError(f"node {parent}: invalid child reference {i}")
            seen[i] = True
        node.children = [nodes[i] for i in rec["children"]]
    return DecisionTree(nodes[0], params, class_count)
