"""Parsing, class distributions, and imputation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brforest import (
    AttributeSpec,
    Dataset,
    ImputationError,
    ParseError,
    UnsupportedFormatError,
    apply_imputation,
    class_distribution,
    compute_imputation_stats,
    impute_mean_mode,
    parse_arff,
    parse_csv,
    to_arff,
)
from conftest import TOY_ARFF, dataset_from_rows


class TestParseArff:
    def test_minimal_document(self):
        d = parse_arff(TOY_ARFF)
        assert d.name == "toy"
        assert d.n_instances == 2
        assert [a.name for a in d.attributes] == ["a", "b", "cls"]
        assert d.class_index == 2
        assert d.class_labels == ("no", "yes")
        assert np.isnan(d.values[1, 1])
        assert d.values[0].tolist() == [1.0, 2.0, 0.0]
        assert d.values[1, 2] == 1.0

    def test_case_insensitive_keywords_and_comments(self):
        text = (
            "% comment\n@RELATION Up\n@Attribute X NUMERIC\n"
            "@attribute y {A,B}\n@DATA\n% another comment\n\n1,A\n"
        )
        d = parse_arff(text)
        assert d.name == "Up"
        assert d.attributes[0].kind == "numeric"
        assert d.n_instances == 1

    def test_quoted_names_and_labels(self):
        text = (
            "@relation 'my data'\n"
            "@attribute 'col one' numeric\n"
            "@attribute cls {'label a',\"label b\"}\n"
            "@data\n"
            "2.5,'label b'\n"
        )
        d = parse_arff(text)
        assert d.name == "my data"
        assert d.attributes[0].name == "col one"
        assert d.class_labels == ("label a", "label b")
        assert d.values[0, 1] == 1.0

    def test_integer_and_real_kinds(self):
        text = "@relation r\n@attribute a integer\n@attribute b real\n@attribute c {x,y}\n@data\n1,2.5e-1,x\n"
        d = parse_arff(text)
        assert d.values[0, 1] == pytest.approx(0.25)

    def test_class_column_override(self):
        text = "@relation r\n@attribute cls {p,q}\n@attribute a numeric\n@data\np,1\n"
        assert parse_arff(text, class_column="cls").class_index == 0
        assert parse_arff(text, class_column=0).class_index == 0

    def test_malformed_header_reports_line(self):
        with pytest.raises(ParseError) as e:
            parse_arff("@relation r\n@attribute broken\n@data\n")
        assert "line 2" in str(e.value)

    def test_arity_mismatch_reports_line(self):
        text = TOY_ARFF + "1,2\n"
        with pytest.raises(ParseError, match="line 9.*expected 3"):
            parse_arff(text)

    def test_unknown_nominal_value(self):
        with pytest.raises(ParseError, match="'maybe' not in declared domain"):
            parse_arff(TOY_ARFF + "1,2,maybe\n")

    def test_sparse_rows_unsupported(self):
        with pytest.raises(UnsupportedFormatError, match="sparse"):
            parse_arff(TOY_ARFF + "{0 1, 2 no}\n")

    def test_missing_class_value(self):
        with pytest.raises(ParseError, match="missing class value"):
            parse_arff(TOY_ARFF + "1,2,?\n")

    def test_string_and_date_rejected(self):
        for kind in ("string", "date"):
            with pytest.raises(UnsupportedFormatError, match=kind):
                parse_arff(f"@relation r\n@attribute s {kind}\n@data\n")

    def test_bad_numeric_cell(self):
        for bad in ("abc", "nan", "inf", "1_000"):
            with pytest.raises(ParseError, match="bad numeric value"):
                parse_arff(TOY_ARFF + f"{bad},2,no\n")

    def test_no_data_section(self):
        with pytest.raises(ParseError, match="@data"):
            parse_arff("@relation r\n@attribute a numeric\n")

    def test_duplicate_nominal_label(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_arff("@relation r\n@attribute c {a,a}\n@data\n")

    def test_non_nominal_class_rejected(self):
        with pytest.raises(ParseError, match="must be nominal"):
            parse_arff("@relation r\n@attribute a numeric\n@attribute b numeric\n@data\n1,2\n")


class TestParseCsv:
    def test_minimal_inference(self):
        d = parse_csv("a,b,cls\n1,x,no\n2,y,yes\n")
        assert d.n_instances == 2
        assert d.attributes[0].kind == "numeric"
        assert d.attributes[1].kind == "nominal"
        assert d.attributes[1].domain == ("x", "y")
        assert d.class_labels == ("no", "yes")

    def test_numeric_with_missing(self):
        d = parse_csv("v,cls\n1,a\n2,a\n?,b\n")
        assert d.attributes[0].kind == "numeric"
        assert np.isnan(d.values[2, 0])

    def test_empty_field_is_missing(self):
        d = parse_csv("v,cls\n1,a\n,b\n")
        assert np.isnan(d.values[1, 0])

    def test_single_non_numeric_value_forces_nominal(self):
        d = parse_csv("v,cls\n1,a\n2,a\nz,b\n")
        assert d.attributes[0].kind == "nominal"
        assert d.attributes[0].domain == ("1", "2", "z")

    def test_ragged_rows(self):
        with pytest.raises(ParseError, match="expected 2 fields"):
            parse_csv("a,cls\n1,x\n1,x,y\n")

    def test_class_column_by_name_and_index(self):
        text = "cls,a\nx,1\ny,2\n"
        assert parse_csv(text, class_column="cls").class_index == 0
        assert parse_csv(text, class_column=0).class_index == 0

    def test_class_column_not_found(self):
        with pytest.raises(ParseError, match="not found"):
            parse_csv("a,b\n1,x\n", class_column="missing")

    def test_class_entirely_missing(self):
        with pytest.raises(ParseError, match="entirely missing"):
            parse_csv("a,cls\n1,?\n2,\n")

    def test_numeric_class_rejected(self):
        with pytest.raises(ParseError, match="inferred numeric"):
            parse_csv("a,cls\nx,1\ny,2\n")

    def test_missing_class_cell_rejected(self):
        with pytest.raises(ParseError, match="missing class value"):
            parse_csv("a,cls\n1,x\n2,?\n3,y\n")

    def test_duplicate_header(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_csv("a,a\n1,x\n")


class TestDatasetType:
    def test_values_are_read_only(self, toy_dataset):
        with pytest.raises(ValueError):
            toy_dataset.values[0, 0] = 9.0

    def test_subset(self, toy_dataset):
        sub = toy_dataset.subset([1])
        assert sub.n_instances == 1
        assert sub.values[0, 2] == 1.0

    def test_class_must_be_nominal(self):
        attrs = (AttributeSpec("a", "numeric"), AttributeSpec("b", "numeric"))
        with pytest.raises(ValueError, match="nominal"):
            Dataset("x", attrs, 1, np.zeros((1, 2)))

    def test_out_of_domain_code_rejected(self):
        attrs = (AttributeSpec("a", "numeric"), AttributeSpec("c", "nominal", ("p", "q")))
        with pytest.raises(ValueError, match="out-of-domain"):
            Dataset("x", attrs, 1, np.array([[1.0, 2.0]]))

    def test_missing_class_cell_rejected(self):
        attrs = (AttributeSpec("a", "numeric"), AttributeSpec("c", "nominal", ("p", "q")))
        with pytest.raises(ValueError, match="class cells"):
            Dataset("x", attrs, 1, np.array([[1.0, np.nan]]))

    def test_attribute_spec_invariants(self):
        with pytest.raises(ValueError):
            AttributeSpec("", "numeric")
        with pytest.raises(ValueError):
            AttributeSpec("c", "nominal", ())
        with pytest.raises(ValueError):
            AttributeSpec("c", "nominal", ("a", "a"))


class TestClassDistribution:
    def test_symmetric(self):
        d = dataset_from_rows(
            [AttributeSpec("x", "numeric"), AttributeSpec("cls", "nominal", ("A", "B"))],
            [[1, "A"], [2, "A"], [3, "B"], [4, "B"]],
        )
        dist = class_distribution(d)
        assert dist.counts == (2, 2)
        assert dist.minority_fraction == 0.5

    def test_counts_sum_to_total(self, toy_dataset):
        dist = class_distribution(toy_dataset)
        assert sum(dist.counts) == dist.total == toy_dataset.n_instances

    def test_minority_index(self):
        d = dataset_from_rows(
            [AttributeSpec("x", "numeric"), AttributeSpec("cls", "nominal", ("A", "B"))],
            [[1, "A"], [2, "B"], [3, "B"]],
        )
        dist = class_distribution(d)
        assert dist.minority_index == 0
        assert dist.minority_fraction == pytest.approx(1 / 3)


class TestImputation:
    def _numeric_with_missing(self):
        return dataset_from_rows(
            [AttributeSpec("v", "numeric"), AttributeSpec("cls", "nominal", ("A", "B"))],
            [[1, "A"], [None, "B"], [3, "A"]],
        )

    def test_numeric_mean(self):
        filled = impute_mean_mode(self._numeric_with_missing())
        assert filled.values[1, 0] == 2.0

    def test_nominal_mode(self):
        d = dataset_from_rows(
            [AttributeSpec("c", "nominal", ("a", "b")), AttributeSpec("cls", "nominal", ("A", "B"))],
            [["a", "A"], ["a", "A"], ["b", "B"], [None, "B"]],
        )
        filled = impute_mean_mode(d)
        assert filled.values[3, 0] == 0.0  # "a"

    def test_mode_tie_breaks_to_lowest_index(self):
        d = dataset_from_rows(
            [AttributeSpec("c", "nominal", ("a", "b")), AttributeSpec("cls", "nominal", ("A", "B"))],
            [["a", "A"], ["b", "B"], [None, "A"]],
        )
        filled = impute_mean_mode(d)
        assert filled.values[2, 0] == 0.0  # tie between a and b -> a

    def test_idempotent(self):
        once = impute_mean_mode(self._numeric_with_missing())
        twice = impute_mean_mode(once)
        assert once.equals(twice)

    def test_only_missing_cells_change(self):
        d = dataset_from_rows(
            [AttributeSpec("v", "numeric"), AttributeSpec("w", "numeric"),
             AttributeSpec("cls", "nominal", ("A", "B"))],
            [[0.1, 7.25, "A"], [None, 0.3, "B"], [0.7, None, "A"]],
        )
        filled = impute_mean_mode(d)
        mask = np.isnan(d.values)
        assert not np.isnan(filled.values).any()
        assert (filled.values[~mask] == d.values[~mask]).all()

    def test_entirely_missing_column_errors(self):
        d = dataset_from_rows(
            [AttributeSpec("v", "numeric"), AttributeSpec("cls", "nominal", ("A", "B"))],
            [[None, "A"], [None, "B"]],
        )
        with pytest.raises(ImputationError, match="'v'"):
            impute_mean_mode(d)

    def test_stats_from_one_dataset_apply_to_another(self):
        train = self._numeric_with_missing()
        stats = compute_imputation_stats(train)
        other = dataset_from_rows(
            [AttributeSpec("v", "numeric"), AttributeSpec("cls", "nominal", ("A", "B"))],
            [[None, "B"]],
        )
        filled = apply_imputation(other, stats)
        assert filled.values[0, 0] == 2.0  # mean of the training column


# -- ARFF writer round-trip ---------------------------------------------------

_label = st.text(
    alphabet=st.characters(whitelist_categories=("L", "N"), whitelist_characters=" _-"),
    min_size=1,
    max_size=8,
).map(str.strip).filter(bool)


@st.composite
def small_datasets(draw):
    n_features = draw(st.integers(1, 3))
    attrs = []
    for j in range(n_features):
        if draw(st.booleans()):
            attrs.append(AttributeSpec(f"f{j}", "numeric"))
        else:
            labels = draw(
                st.lists(_label, min_size=2, max_size=3, unique=True)
            )
            attrs.append(AttributeSpec(f"f{j}", "nominal", tuple(labels)))
    class_labels = draw(st.lists(_label, min_size=2, max_size=3, unique=True))
    attrs.append(AttributeSpec("cls", "nominal", tuple(class_labels)))
    n_rows = draw(st.integers(1, 6))
    rows = []
    for _ in range(n_rows):
        row = []
        for attr in attrs[:-1]:
            if draw(st.booleans()):
                row.append(None)
            elif attr.kind == "numeric":
                row.append(draw(st.floats(-1e6, 1e6, allow_nan=False, width=64)))
            else:
                row.append(draw(st.sampled_from(attr.domain)))
        row.append(draw(st.sampled_from(class_labels)))
        rows.append(row)
    return dataset_from_rows(attrs, rows, name=draw(_label))


@given(small_datasets())
@settings(max_examples=60, deadline=None)
def test_arff_round_trip(d):
    assert parse_arff(to_arff(d)).equals(d)


@given(small_datasets())
@settings(max_examples=40, deadline=None)
def test_impute_idempotent_and_preserving(d):
    try:
        once = impute_mean_mode(d)
    except ImputationError:
        return  # entirely-missing column: contract says error
    assert impute_mean_mode(once).equals(once)
    mask = np.isnan(d.values)
    assert (once.values[~mask] == d.values[~mask]).all()
    assert not np.isnan(once.values).any()
