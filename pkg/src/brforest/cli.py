"""Command-line interface: inspect, train, predict, cross-validate, benchmark.

Every command is byte-deterministic for a fixed seed; `--workers` changes
wall time, never output.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path

import numpy as np

from .dataset import (
    Dataset,
    RawTable,
    _arff_table,
    _csv_table,
    _designate_class,
    class_distribution,
)
from .errors import BrfError
from .evaluation import (
    ConfusionMatrix,
    MetricsReport,
    benchmark,
    confusion,
    cross_validate,
    metrics,
)
from .forest import (
    ForestParams,
    check_schema,
    deserialize_model,
    predict_batch,
    serialize_model,
    train_forest,
)
from .sampling import SampleSize

_INT_RE = re.compile(r"[+-]?\d+\Z")


def _class_column_arg(value: str | None) -> int | str | None:
    if value is None:
        return None
    return int(value) if _INT_RE.match(value) else value


def _detect_format(path: str, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".arff":
        return "arff"
    if suffix == ".csv":
        return "csv"
    raise BrfError(
        f"cannot infer format of {path!r} from its extension; pass --format"
    )


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise BrfError(f"cannot read {path!r}: {e.strerror or e}") from e


def _load_raw(path: str, fmt: str) -> RawTable:
    text = _read_text(path)
    if _detect_format(path, fmt) == "arff":
        return _arff_table(text)
    return _csv_table(text, name=Path(path).stem)


def _load_dataset(path: str, fmt: str, class_column: str | None) -> Dataset:
    return _designate_class(_load_raw(path, fmt), _class_column_arg(class_column))


# -- rendering ---------------------------------------------------------------


def _render_confusion(cm: ConfusionMatrix) -> list[str]:
    width = max(len(label) for label in cm.labels)
    width = max(width, max(len(str(int(c))) for c in cm.counts.ravel()))
    header = " " * (width + 2) + "  ".join(f"{l:>{width}}" for l in cm.labels)
    lines = ["confusion (rows=actual, cols=predicted):", header]
    for i, label in enumerate(cm.labels):
        cells = "  ".join(f"{int(c):>{width}}" for c in cm.counts[i])
        lines.append(f"  {label:>{width}} {cells}")
    return lines


def _render_metrics(r: MetricsReport) -> list[str]:
    return [
        f"TPR_ma:  {r.tpr_majority:.1f}",
        f"TPR_mi:  {r.tpr_minority:.1f}",
        f"CCR:     {r.ccr:.1f}",
        f"TPR_avg: {r.tpr_avg:.1f}",
    ]


_BENCH_COLUMNS = ("dataset", "system", "trees", "TPR_ma", "TPR_mi", "CCR", "TPR_avg")


def _bench_tsv_row(dataset: str, r: MetricsReport) -> str:
    return "\t".join(
        (
            dataset,
            r.system_label,
            str(r.num_trees),
            repr(r.tpr_majority),
            repr(r.tpr_minority),
            repr(r.ccr),
            repr(r.tpr_avg),
        )
    )


def _bench_text_rows(rows: list[tuple[str, MetricsReport]]) -> list[str]:
    table = [_BENCH_COLUMNS] + [
        (
            name,
            r.system_label,
            str(r.num_trees),
            f"{r.tpr_majority:.1f}",
            f"{r.tpr_minority:.1f}",
            f"{r.ccr:.1f}",
            f"{r.tpr_avg:.1f}",
        )
        for name, r in rows
    ]
    widths = [max(len(row[j]) for row in table) for j in range(len(_BENCH_COLUMNS))]
    return ["  ".join(f"{cell:<{w}}" for cell, w in zip(row, widths)).rstrip()
            for row in table]


# -- commands ------------------------------------------------------------------


def _cmd_info(args) -> int:
    status = 0
    blocks = []
    for path in args.paths:
        try:
            d = _load_dataset(path, args.format, args.class_column)
        except BrfError as e:
            print(f"error: {path}: {e}", file=sys.stderr)
            status = 1
            continue
        dist = class_distribution(d)
        counts = ", ".join(
            f"{label}={count}" for label, count in zip(dist.labels, dist.counts)
        )
        minority = dist.labels[dist.minority_index]
        blocks.append(
            "\n".join(
                [
                    f"file: {path}",
                    f"name: {d.name}",
                    f"instances: {d.n_instances}",
                    f"attributes: {d.n_attributes} ({d.n_attributes - 1} features + class)",
                    f"class: {d.class_attribute.name}",
                    f"labels: {', '.join(d.class_labels)}",
                    f"counts: {counts}",
                    f"minority: {minority} ({100.0 * dist.minority_fraction:.2f}%)",
                ]
            )
        )
    print("\n\n".join(blocks))
    return status


def _forest_params(args) -> ForestParams:
    sample_size = None
    if args.sample_size is not None:
        sample_size = SampleSize(tuple(int(v) for v in args.sample_size.split(",")))
    return ForestParams(
        num_trees=args.trees,
        balanced=args.balanced,
        sample_size=sample_size,
        mtry=args.mtry,
        min_leaf=args.min_leaf,
        master_seed=args.seed,
    )


def _cmd_train(args) -> int:
    d = _load_dataset(args.path, args.format, args.class_column)
    model = train_forest(d, _forest_params(args), workers=args.workers)
    Path(args.model).write_text(serialize_model(model))
    print(f"model: {args.model}")
    print(f"system: {model.params.system_label}")
    print(f"trees: {model.params.num_trees}")
    if model.params.sample_size is not None:
        print(f"sample-size: {','.join(str(c) for c in model.params.sample_size.per_class)}")
    print(f"mtry: {model.params.mtry}")
    print(f"seed: {model.params.master_seed}")
    return 0


def _cmd_predict(args) -> int:
    model = deserialize_model(_read_text(args.model))
    table = _load_raw(args.path, args.format)
    class_attr = model.attributes[model.class_index]
    featureless = tuple(
        a for j, a in enumerate(model.attributes) if j != model.class_index
    )

    labeled = any(a.name == class_attr.name for a in table.attributes)
    if labeled:
        check_schema(model, table.attributes)
        d = _designate_class(table, model.class_index)
        X = d.values
        truth = d.class_codes
    else:
        if table.attributes != featureless:
            check_schema(model, table.attributes)  # raises naming the mismatch
        X = np.insert(table.values, model.class_index, np.nan, axis=1)
        truth = None

    codes, votes = predict_batch(model, X)
    labels = model.class_labels
    head = ["index", "predicted"] + [f"votes_{label}" for label in labels]
    print("\t".join(head))
    for i, (c, v) in enumerate(zip(codes, votes)):
        print("\t".join([str(i), labels[int(c)]] + [str(int(n)) for n in v]))

    if truth is not None:
        cm = confusion(codes, truth, labels=labels)
        print()
        for line in _render_confusion(cm):
            print(line)
        try:
            dist = class_distribution(
                Dataset(table.name, model.attributes, model.class_index, X)
            )
            report = metrics(cm, dist.minority_index,
                             num_trees=model.params.num_trees,
                             system_label=model.params.system_label)
            for line in _render_metrics(report):
                print(line)
        except ValueError as e:
            print(f"metrics unavailable: {e}")
    return 0


def _cmd_cv(args) -> int:
    d = _load_dataset(args.path, args.format, args.class_column)
    params = _forest_params(args)
    report = cross_validate(
        d,
        params,
        k=args.folds,
        seed=args.seed,
        workers=args.workers,
        stratified=not args.no_stratify,
    )
    if args.output == "tsv":
        print("\t".join(_BENCH_COLUMNS))
        print(_bench_tsv_row(d.name, report))
        return 0
    print(f"dataset: {d.name}")
    print(f"system: {report.system_label}")
    print(f"trees: {report.num_trees}")
    print(f"folds: {args.folds}")
    print(f"seed: {args.seed}")
    for line in _render_confusion(report.confusion):
        print(line)
    for line in _render_metrics(report):
        print(line)
    return 0


def _cmd_bench(args) -> int:
    tree_counts = [int(t) for t in args.trees.split(",")]
    rows: list[tuple[str, MetricsReport]] = []
    failed = 0
    for path in args.paths:
        try:
            d = _load_dataset(path, args.format, args.class_column)
            for row in benchmark(
                [d],
                tree_counts=tree_counts,
                k=args.folds,
                seed=args.seed,
                workers=args.workers,
                mtry=args.mtry,
                min_leaf=args.min_leaf,
            ):
                rows.append((row.dataset, row.report))
        except BrfError as e:
            print(f"error: {path}: {e}", file=sys.stderr)
            failed += 1
        except ValueError as e:
            print(f"error: {path}: {e}", file=sys.stderr)
            failed += 1
    if args.output == "tsv":
        print("\t".join(_BENCH_COLUMNS))
        for name, report in rows:
            print(_bench_tsv_row(name, report))
    else:
        for line in _bench_text_rows(rows):
            print(line)
    return 1 if failed else 0


# -- parser --------------------------------------------------------------------


def _add_common_io(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--format",
        choices=("auto", "arff", "csv"),
        default="auto",
        help="input file format (default: by extension)",
    )
    p.add_argument(
        "--class-column",
        default=None,
        help="class attribute name or index (default: last attribute)",
    )


def _add_training_flags(p: argparse.ArgumentParser, trees_default: int | None) -> None:
    if trees_default is not None:
        p.add_argument("--trees", type=int, default=trees_default,
                       help=f"number of trees (default {trees_default})")
    p.add_argument("--balanced", action="store_true",
                   help="per-class balanced bootstrap (defaults each class "
                        "to the minority count)")
    p.add_argument("--sample-size", default=None, metavar="N0,N1",
                   help="explicit per-class bootstrap draw counts; requires --balanced")
    p.add_argument("--mtry", type=int, default=None,
                   help="candidate features per node (default floor(log2(F))+1)")
    p.add_argument("--min-leaf", type=int, default=1,
                   help="minimum node size to attempt a split (default 1)")
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="parallel workers; never affects results "
                        "(default: available cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brforest",
        description="Random forests with an optional per-class balanced "
                    "bootstrap for imbalanced two-class data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="summarize a dataset file")
    p.add_argument("paths", nargs="+", help="dataset file(s)")
    _add_common_io(p)
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("train", help="train a forest and write the model file")
    p.add_argument("path", help="training dataset file")
    p.add_argument("--model", required=True, help="output model path")
    _add_common_io(p)
    _add_training_flags(p, trees_default=100)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict instances with a saved model")
    p.add_argument("path", help="input dataset file (with or without the class column)")
    p.add_argument("--model", required=True, help="model file from `train`")
    _add_common_io(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p.add_argument("path", help="dataset file")
    _add_common_io(p)
    _add_training_flags(p, trees_default=100)
    p.add_argument("--folds", type=int, default=10, help="fold count (default 10)")
    p.add_argument("--no-stratify", action="store_true",
                   help="plain instead of stratified fold assignment")
    p.add_argument("--output", choices=("text", "tsv"), default="text",
                   help="text (1 decimal) or tsv (full precision)")
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("bench", help="RF vs BRF cross-validation sweep")
    p.add_argument("paths", nargs="+", help="dataset file(s)")
    _add_common_io(p)
    p.add_argument("--trees", default="20,100,2000", metavar="T0,T1,...",
                   help="tree counts to sweep (default 20,100,2000)")
    p.add_argument("--mtry", type=int, default=None,
                   help="candidate features per node (default floor(log2(F))+1)")
    p.add_argument("--min-leaf", type=int, default=1,
                   help="minimum node size to attempt a split (default 1)")
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="parallel workers; never affects results")
    p.add_argument("--folds", type=int, default=10, help="fold count (default 10)")
    p.add_argument("--output", choices=("tsv", "text"), default="tsv",
                   help="tsv (full precision) or text (1 decimal)")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "sample_size", None) is not None and not args.balanced:
        parser.error("--sample-size requires --balanced")
    if getattr(args, "seed", 0) < 0:
        parser.error("--seed must be non-negative")
    try:
        return args.func(args)
    except BrfError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
