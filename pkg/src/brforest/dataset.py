"""Typed datasets parsed from ARFF or CSV files.

A `Dataset` is immutable once constructed. Cell storage is a single float64
matrix: numeric cells hold their value, nominal cells hold the index of the
category in the attribute's declared domain, and NaN marks a missing cell.
The class attribute must be nominal and is never missing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ImputationError, ParseError, UnsupportedFormatError

__all__ = [
    "AttributeSpec",
    "Dataset",
    "ClassDistribution",
    "ImputationStats",
    "parse_arff",
    "parse_csv",
    "to_arff",
    "class_distribution",
    "compute_imputation_stats",
    "apply_imputation",
    "impute_mean_mode",
]

NUMERIC = "numeric"
NOMINAL = "nominal"

_QUOTES = ("'", '"')


@dataclass(frozen=True)
class AttributeSpec:
    """Schema entry for one column: a name plus numeric or nominal kind."""

    name: str
    kind: str
    domain: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("attribute name must be non-empty")
        if self.kind not in (NUMERIC, NOMINAL):
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == NOMINAL:
            if not self.domain:
                raise ValueError(f"nominal attribute {self.name!r} needs a non-empty domain")
            if len(set(self.domain)) != len(self.domain):
                raise ValueError(f"nominal attribute {self.name!r} has duplicate labels")
        elif self.domain:
            raise ValueError(f"numeric attribute {self.name!r} cannot have a domain")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of instances with a designated nominal class column.

    `values` is an (instances x attributes) float64 matrix in the cell
    encoding described in the module docstring.
    """

    name: str
    attributes: tuple[AttributeSpec, ...]
    class_index: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        self._validate()

    def _validate(self):
        m = len(self.attributes)
        if m == 0:
            raise ValueError("dataset needs at least one attribute")
        if self.values.ndim != 2 or self.values.shape[1] != m:
            raise ValueError(
                f"values shape {self.values.shape} does not match {m} attributes"
            )
        if not 0 <= self.class_index < m:
            raise ValueError(f"class index {self.class_index} out of range")
        if self.class_attribute.kind != NOMINAL:
            raise ValueError("class attribute must be nominal")
        for j, attr in enumerate(self.attributes):
            if attr.kind != NOMINAL:
                continue
            col = self.values[:, j]
            codes = col[~np.isnan(col)]
            if codes.size and (
                (codes != np.floor(codes)).any()
                or codes.min() < 0
                or codes.max() >= len(attr.domain)
            ):
                raise ValueError(f"attribute {attr.name!r} has out-of-domain codes")
        if np.isnan(self.values[:, self.class_index]).any():
            raise ValueError("class cells must not be missing")

    # -- conveniences ---------------------------------------------------

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def class_attribute(self) -> AttributeSpec:
        return self.attributes[self.class_index]

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.class_attribute.domain

    @cached_property
    def class_codes(self) -> np.ndarray:
        """Per-instance class category index as an int64 array."""
        codes = self.values[:, self.class_index].astype(np.int64)
        codes.setflags(write=False)
        return codes

    @property
    def feature_indices(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.n_attributes) if j != self.class_index)

    def subset(self, indices) -> "Dataset":
        """New dataset containing the given instance rows (copies)."""
        rows = np.asarray(indices, dtype=np.intp)
        return Dataset(self.name, self.attributes, self.class_index, self.values[rows])

    def equals(self, other: "Dataset") -> bool:
        return (
            self.name == other.name
            and self.attributes == other.attributes
            and self.class_index == other.class_index
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True)
class ClassDistribution:
    """Per-class instance counts in class-domain order."""

    labels: tuple[str, ...]
    counts: tuple[int, ...]
    total: int

    def __post_init__(self):
        if sum(self.counts) != self.total:
            raise ValueError("counts must sum to total")

    @property
    def minority_index(self) -> int:
        # ties resolve to the lowest class index
        return min(range(len(self.counts)), key=lambda c: (self.counts[c], c))

    @property
    def minority_fraction(self) -> float:
        return self.counts[self.minority_index] / self.total


def class_distribution(d: Dataset) -> ClassDistribution:
    """Count instances per class label, in domain order."""
    counts = np.bincount(d.class_codes, minlength=len(d.class_labels))
    return ClassDistribution(d.class_labels, tuple(int(c) for c in counts), d.n_instances)


# -- number parsing ------------------------------------------------------


def _try_parse_number(token: str) -> float | None:
    """Parse a decimal literal (optional exponent), locale-independent.

    Rejects inf/nan and underscore-grouped digits so a stray token can
    never masquerade as a value or collide with missing-cell encoding.
    """
    if not token or "_" in token:
        return None
    try:
        v = float(token)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


# -- ARFF ----------------------------------------------------------------


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] in _QUOTES and token[-1] == token[0]:
        inner = token[1:-1]
        out = []
        escape = False
        for ch in inner:
            if escape:
                out.append(ch)
                escape = False
            elif ch == "\\":
                escape = True
            else:
                out.append(ch)
        return "".join(out)
    return token


def _split_fields(line: str) -> list[str]:
    """Split on commas that sit outside quoted sections."""
    if "'" not in line and '"' not in line:
        return line.split(",")
    fields: list[str] = []
    buf: list[str] = []
    quote: str | None = None
    escape = False
    for ch in line:
        if escape:
            buf.append(ch)
            escape = False
        elif quote:
            buf.append(ch)
            if ch == "\\":
                escape = True
            elif ch == quote:
                quote = None
        elif ch in _QUOTES:
            buf.append(ch)
            quote = ch
        elif ch == ",":
            fields.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    fields.append("".join(buf))
    return fields


def _read_name_token(rest: str, lineno: int) -> tuple[str, str]:
    """Consume one (possibly quoted) token, returning (token, remainder)."""
    rest = rest.lstrip()
    if not rest:
        raise ParseError("expected a name", lineno)
    if rest[0] in _QUOTES:
        quote = rest[0]
        out = []
        i = 1
        while i < len(rest):
            ch = rest[i]
            if ch == "\\" and i + 1 < len(rest):
                out.append(rest[i + 1])
                i += 2
                continue
            if ch == quote:
                return "".join(out), rest[i + 1 :]
            out.append(ch)
            i += 1
        raise ParseError("unterminated quoted name", lineno)
    parts = rest.split(None, 1)
    return parts[0], parts[1] if len(parts) > 1 else ""


def _parse_attribute_decl(rest: str, lineno: int) -> AttributeSpec:
    name, type_spec = _read_name_token(rest, lineno)
    type_spec = type_spec.strip()
    if not type_spec:
        raise ParseError(f"attribute {name!r} is missing a type", lineno)
    if type_spec.startswith("{"):
        if not type_spec.endswith("}"):
            raise ParseError(f"attribute {name!r}: unterminated nominal domain", lineno)
        labels = [_unquote(t) for t in _split_fields(type_spec[1:-1])]
        labels = [t for t in labels]
        if any(not t for t in labels):
            raise ParseError(f"attribute {name!r}: empty nominal label", lineno)
        if len(set(labels)) != len(labels):
            raise ParseError(f"attribute {name!r}: duplicate nominal label", lineno)
        return AttributeSpec(name, NOMINAL, tuple(labels))
    keyword = type_spec.split(None, 1)[0].lower()
    if keyword in ("numeric", "real", "integer"):
        return AttributeSpec(name, NUMERIC)
    if keyword in ("string", "date", "relational"):
        raise UnsupportedFormatError(
            f"attribute {name!r}: {keyword} attributes are not supported", lineno
        )
    raise ParseError(f"attribute {name!r}: unknown type {type_spec!r}", lineno)


def _resolve_class_index(
    attributes: list[AttributeSpec], class_column: int | str | None
) -> int:
    if class_column is None:
        return len(attributes) - 1
    if isinstance(class_column, str):
        for j, attr in enumerate(attributes):
            if attr.name == class_column:
                return j
        raise ParseError(f"class column {class_column!r} not found")
    j = int(class_column)
    if j < 0:
        j += len(attributes)
    if not 0 <= j < len(attributes):
        raise ParseError(f"class column index {class_column} out of range")
    return j


@dataclass(frozen=True, eq=False)
class RawTable:
    """Parsed file contents before a class column has been designated."""

    name: str
    attributes: tuple[AttributeSpec, ...]
    values: np.ndarray
    row_lines: tuple[int, ...]  # source line of each data row


def _arff_table(text: str) -> RawTable:
    relation: str | None = None
    attributes: list[AttributeSpec] = []
    in_data = False
    n_attrs = 0
    lookups: list[dict[str, int] | None] = []
    kinds: list[str] = []
    rows: list[list[float]] = []
    row_lines: list[int] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip().lstrip("﻿")
        if not line or line.startswith("%"):
            continue
        if not in_data:
            lower = line.lower()
            if lower.startswith("@relation"):
                relation = _unquote(line[len("@relation") :].strip()) or "unnamed"
            elif lower.startswith("@attribute"):
                attributes.append(_parse_attribute_decl(line[len("@attribute") :], lineno))
            elif lower.startswith("@data"):
                if relation is None:
                    raise ParseError("@data before @relation", lineno)
                if not attributes:
                    raise ParseError("@data before any @attribute", lineno)
                n_attrs = len(attributes)
                kinds = [a.kind for a in attributes]
                lookups = [
                    {label: i for i, label in enumerate(a.domain)} if a.kind == NOMINAL else None
                    for a in attributes
                ]
                in_data = True
            else:
                raise ParseError(f"unrecognized header line {line.split()[0]!r}", lineno)
            continue

        if line.startswith("{"):
            raise UnsupportedFormatError("sparse ARFF rows are not supported", lineno)
        fields = _split_fields(line)
        if len(fields) != n_attrs:
            raise ParseError(
                f"expected {n_attrs} values, found {len(fields)}", lineno
            )
        row = [0.0] * n_attrs
        for j, tok in enumerate(fields):
            tok = tok.strip()
            if tok == "?":
                row[j] = np.nan
            elif kinds[j] == NUMERIC:
                v = _try_parse_number(tok)
                if v is None:
                    raise ParseError(
                        f"attribute {attributes[j].name!r}: bad numeric value {tok!r}", lineno
                    )
                row[j] = v
            else:
                code = lookups[j].get(_unquote(tok))
                if code is None:
                    raise ParseError(
                        f"attribute {attributes[j].name!r}: value {_unquote(tok)!r} "
                        "not in declared domain",
                        lineno,
                    )
                row[j] = float(code)
        rows.append(row)
        row_lines.append(lineno)

    if not in_data:
        raise ParseError("no @data section found")
    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), n_attrs)
    return RawTable(relation, tuple(attributes), values, tuple(row_lines))


def _designate_class(table: RawTable, class_column: int | str | None) -> Dataset:
    class_index = _resolve_class_index(list(table.attributes), class_column)
    attr = table.attributes[class_index]
    if attr.kind != NOMINAL:
        raise ParseError(f"class attribute {attr.name!r} must be nominal")
    missing = np.flatnonzero(np.isnan(table.values[:, class_index]))
    if missing.size:
        raise ParseError("missing class value", table.row_lines[missing[0]])
    return Dataset(table.name, table.attributes, class_index, table.values)


def parse_arff(text: str, class_column: int | str | None = None) -> Dataset:
    """Parse a dense ARFF document into a Dataset.

    Keywords are case-insensitive, `%` starts a comment line, `?` is a
    missing cell, and nominal values map to their declared domain index.
    The class attribute is the last one declared unless `class_column`
    (attribute name or index) says otherwise.
    """
    return _designate_class(_arff_table(text), class_column)


def _needs_quoting(label: str) -> bool:
    special = set(" ,{}%'\"\t")
    return not label or label == "?" or any(ch in special for ch in label)


def _quote(label: str) -> str:
    if _needs_quoting(label):
        escaped = label.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    return label


def to_arff(d: Dataset) -> str:
    """Serialize a Dataset back to dense ARFF (inverse of parse_arff)."""
    out = [f"@relation {_quote(d.name)}"]
    for attr in d.attributes:
        if attr.kind == NUMERIC:
            out.append(f"@attribute {_quote(attr.name)} numeric")
        else:
            domain = ",".join(_quote(label) for label in attr.domain)
            out.append(f"@attribute {_quote(attr.name)} {{{domain}}}")
    out.append("@data")
    for row in d.values:
        cells = []
        for j, v in enumerate(row):
            if np.isnan(v):
                cells.append("?")
            elif d.attributes[j].kind == NUMERIC:
                cells.append(repr(float(v)))
            else:
                cells.append(_quote(d.attributes[j].domain[int(v)]))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


# -- CSV -----------------------------------------------------------------


def _csv_table(text: str, name: str = "csv") -> RawTable:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty document") from None
    header = [h.strip().lstrip("﻿") for h in header]
    if any(not h for h in header):
        raise ParseError("empty column name in header", 1)
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in header", 1)
    n_cols = len(header)

    raw_rows: list[list[str]] = []
    row_lines: list[int] = []
    for fields in reader:
        if not fields:
            continue
        if len(fields) != n_cols:
            raise ParseError(
                f"expected {n_cols} fields, found {len(fields)}", reader.line_num
            )
        raw_rows.append([f.strip() for f in fields])
        row_lines.append(reader.line_num)

    # type inference per column; an all-missing column is vacuously numeric
    attributes: list[AttributeSpec] = []
    domains: list[dict[str, int]] = []
    for j, col_name in enumerate(header):
        tokens = [row[j] for row in raw_rows if row[j] not in ("", "?")]
        if all(_try_parse_number(t) is not None for t in tokens):
            attributes.append(AttributeSpec(col_name, NUMERIC))
            domains.append({})
        else:
            domain: dict[str, int] = {}
            for t in tokens:
                if t not in domain:
                    domain[t] = len(domain)
            attributes.append(AttributeSpec(col_name, NOMINAL, tuple(domain)))
            domains.append(domain)

    values = np.empty((len(raw_rows), n_cols), dtype=np.float64)
    for i, row in enumerate(raw_rows):
        for j, tok in enumerate(row):
            if tok in ("", "?"):
                values[i, j] = np.nan
            elif attributes[j].kind == NUMERIC:
                values[i, j] = _try_parse_number(tok)
            else:
                values[i, j] = float(domains[j][tok])
    return RawTable(name, tuple(attributes), values, tuple(row_lines))


def parse_csv(
    text: str, class_column: int | str | None = None, name: str = "csv"
) -> Dataset:
    """Parse header-row CSV with inferred column types.

    A column is numeric when every non-missing field parses as a real
    number, otherwise nominal with its domain in first-appearance order.
    Empty fields and `?` are missing. The last column is the class unless
    `class_column` (header name or index) overrides it.
    """
    table = _csv_table(text, name)
    class_index = _resolve_class_index(list(table.attributes), class_column)
    attr = table.attributes[class_index]
    if np.isnan(table.values[:, class_index]).all():
        raise ParseError(f"class column {attr.name!r} is entirely missing")
    if attr.kind != NOMINAL:
        raise ParseError(
            f"class column {attr.name!r} was inferred numeric; the class must be nominal"
        )
    return _designate_class(table, class_column)


# -- imputation ----------------------------------------------------------


@dataclass(frozen=True)
class ImputationStats:
    """Per-column fill values: the mean for numeric columns, the most
    frequent category for nominal ones (ties go to the lowest index)."""

    fill: tuple[float, ...]


def compute_imputation_stats(d: Dataset, on_empty: str = "error") -> ImputationStats:
    """Column means/modes over the non-missing cells of `d`.

    A column with no values at all is an error by default; training passes
    ``on_empty="neutral"`` to fill such columns with a constant (0.0, or the
    first category), which leaves them unsplittable and therefore inert.
    """
    fill = []
    for j, attr in enumerate(d.attributes):
        col = d.values[:, j]
        present = col[~np.isnan(col)]
        if present.size == 0:
            if on_empty != "neutral":
                raise ImputationError(
                    f"column {attr.name!r} is entirely missing; nothing to impute from"
                )
            fill.append(0.0)
        elif attr.kind == NUMERIC:
            fill.append(float(present.mean()))
        else:
            counts = np.bincount(present.astype(np.int64), minlength=len(attr.domain))
            fill.append(float(int(np.argmax(counts))))
    return ImputationStats(tuple(fill))


def apply_imputation(d: Dataset, stats: ImputationStats) -> Dataset:
    """Replace every missing cell with the stats' fill for its column."""
    if len(stats.fill) != d.n_attributes:
        raise ImputationError(
            f"stats cover {len(stats.fill)} columns, dataset has {d.n_attributes}"
        )
    values = d.values.copy()
    for j, fill in enumerate(stats.fill):
        mask = np.isnan(values[:, j])
        if mask.any():
            values[mask, j] = fill
    return Dataset(d.name, d.attributes, d.class_index, values)


def impute_mean_mode(d: Dataset) -> Dataset:
    """Fill missing cells from the dataset's own column means/modes."""
    return apply_imputation(d, compute_imputation_stats(d))

