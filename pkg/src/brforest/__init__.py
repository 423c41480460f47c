"""Random forests with an optional per-class balanced bootstrap (BRF).

The balanced variant draws every tree's bootstrap sample per class with a
fixed sample-size vector (by default the minority-class count), which
keeps minority instances in every tree on severely imbalanced two-class
data. Includes ARFF/CSV ingestion, mean/mode imputation, stratified
cross-validation, and the TPR/CCR metric suite.
"""

from .dataset import (
    AttributeSpec,
    ClassDistribution,
    Dataset,
    ImputationStats,
    apply_imputation,
    class_distribution,
    compute_imputation_stats,
    impute_mean_mode,
    parse_arff,
    parse_csv,
    to_arff,
)
from .errors import (
    BrfError,
    ImputationError,
    ModelFormatError,
    ParseError,
    SchemaError,
    UnsupportedFormatError,
)
from .evaluation import (
    BenchmarkRow,
    ConfusionMatrix,
    FoldAssignment,
    MetricsReport,
    benchmark,
    confusion,
    cross_validate,
    metrics,
    plain_folds,
    stratified_folds,
)
from .forest import (
    ForestModel,
    ForestParams,
    OobReport,
    deserialize_model,
    oob_error,
    predict,
    predict_batch,
    serialize_model,
    train_forest,
)
from .rng import RandomSource, derive_seed
from .sampling import (
    IndexSample,
    SampleSize,
    balanced_bootstrap,
    bootstrap,
    default_sample_size,
)
from .tree import (
    DecisionTree,
    Leaf,
    NominalSplit,
    NumericSplit,
    SplitDescription,
    TreeParams,
    best_split,
    default_mtry,
    entropy,
    grow_tree,
    information_gain,
    predict_tree,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeSpec",
    "ClassDistribution",
    "Dataset",
    "ImputationStats",
    "apply_imputation",
    "class_distribution",
    "compute_imputation_stats",
    "impute_mean_mode",
    "parse_arff",
    "parse_csv",
    "to_arff",
    "BrfError",
    "ImputationError",
    "ModelFormatError",
    "ParseError",
    "SchemaError",
    "UnsupportedFormatError",
    "BenchmarkRow",
    "ConfusionMatrix",
    "FoldAssignment",
    "MetricsReport",
    "benchmark",
    "confusion",
    "cross_validate",
    "metrics",
    "plain_folds",
    "stratified_folds",
    "ForestModel",
    "ForestParams",
    "OobReport",
    "deserialize_model",
    "oob_error",
    "predict",
    "predict_batch",
    "serialize_model",
    "train_forest",
    "RandomSource",
    "derive_seed",
    "IndexSample",
    "SampleSize",
    "balanced_bootstrap",
    "bootstrap",
    "default_sample_size",
    "DecisionTree",
    "Leaf",
    "NominalSplit",
    "NumericSplit",
    "SplitDescription",
    "TreeParams",
    "best_split",
    "default_mtry",
    "entropy",
    "grow_tree",
    "information_gain",
    "predict_tree",
]
