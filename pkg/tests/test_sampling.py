"""Random source determinism and both bootstrap samplers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brforest import (
    AttributeSpec,
    ClassDistribution,
    RandomSource,
    SampleSize,
    balanced_bootstrap,
    bootstrap,
    default_sample_size,
    derive_seed,
)
from conftest import dataset_from_rows

ATTRS = [AttributeSpec("x", "numeric"), AttributeSpec("cls", "nominal", ("A", "B"))]


def two_class(n_a: int, n_b: int):
    rows = [[i, "A"] for i in range(n_a)] + [[n_a + i, "B"] for i in range(n_b)]
    return dataset_from_rows(ATTRS, rows)


class TestRandomSource:
    def test_same_seed_same_stream(self):
        a = RandomSource(7).gen.integers(0, 1000, 32)
        b = RandomSource(7).gen.integers(0, 1000, 32)
        assert (a == b).all()

    def test_children_are_distinct(self):
        streams = [RandomSource(7).child(i).gen.integers(0, 2**32, 8) for i in range(20)]
        assert len({tuple(s) for s in streams}) == 20

    def test_child_differs_from_parent(self):
        parent = RandomSource(7).gen.integers(0, 2**32, 8)
        child = RandomSource(7).child(0).gen.integers(0, 2**32, 8)
        assert (parent != child).any()

    def test_derive_seed_deterministic(self):
        assert derive_seed(42, 3) == derive_seed(42, 3)
        assert derive_seed(42, 3) != derive_seed(42, 4)
        assert 0 <= derive_seed(42, 3) < 2**64

    def test_seed_range_validated(self):
        with pytest.raises(ValueError):
            RandomSource(-1)
        with pytest.raises(ValueError):
            RandomSource(2**64)


class TestBootstrap:
    def test_single_instance(self):
        sample = bootstrap(two_class(1, 0), RandomSource(0))
        assert sample.indices.tolist() == [0]

    def test_size_equals_dataset_size(self):
        for seed in range(5):
            d = two_class(17, 6)
            assert len(bootstrap(d, RandomSource(seed))) == 23

    def test_empty_dataset_errors(self):
        d = two_class(1, 1).subset([])
        with pytest.raises(ValueError, match="empty"):
            bootstrap(d, RandomSource(0))

    def test_pinned_seed_42_multiset(self):
        # regression pin: recorded once from the chosen generator
        sample = bootstrap(two_class(5, 0), RandomSource(42))
        assert sample.indices.tolist() == [0, 3, 3, 2, 2]

    def test_pure_function_of_inputs(self):
        d = two_class(30, 10)
        a = bootstrap(d, RandomSource(9)).indices
        b = bootstrap(d, RandomSource(9)).indices
        assert (a == b).all()

    def test_unique_draw_fraction_near_one_minus_inv_e(self):
        # quick version; the acceptance suite runs 100 seeds
        n, runs = 10_000, 20
        d = two_class(n, 0)
        fracs = [
            len(np.unique(bootstrap(d, RandomSource(s)).indices)) / n
            for s in range(runs)
        ]
        assert abs(np.mean(fracs) - (1 - 1 / np.e)) < 0.01

    def test_uniformity_smoke(self):
        # 10,000 draws over 10 instances: each within 3 sigma of 1,000
        d = two_class(10, 0)
        draws = np.concatenate(
            [bootstrap(d, RandomSource(s)).indices for s in range(1000)]
        )
        freq = np.bincount(draws, minlength=10)
        sigma = np.sqrt(10_000 * 0.1 * 0.9)
        assert (np.abs(freq - 1000) <= 3 * sigma).all()


class TestBalancedBootstrap:
    def test_forced_repetition_of_single_minority(self):
        d = two_class(10, 1)
        sample = balanced_bootstrap(d, SampleSize((2, 2)), RandomSource(3))
        idx = sample.indices
        assert len(idx) == 4
        assert (d.class_codes[idx[:2]] == 0).all()
        assert idx[2:].tolist() == [10, 10]  # the only B instance, twice

    def test_default_sizes_both_minority_count(self):
        from brforest import class_distribution

        d = two_class(100, 5)
        s = default_sample_size(class_distribution(d))
        assert s.per_class == (5, 5)
        sample = balanced_bootstrap(d, s, RandomSource(1))
        assert len(sample) == 10

    def test_zero_sample_size_rejected(self):
        with pytest.raises(ValueError, match=">= 1"):
            SampleSize((0, 0))

    def test_class_grouped_order(self):
        d = two_class(6, 6)
        sample = balanced_bootstrap(d, SampleSize((3, 3)), RandomSource(5))
        codes = d.class_codes[sample.indices]
        assert codes.tolist() == [0, 0, 0, 1, 1, 1]

    def test_oversampling_beyond_class_count_allowed(self):
        d = two_class(3, 2)
        sample = balanced_bootstrap(d, SampleSize((10, 10)), RandomSource(0))
        codes = d.class_codes[sample.indices]
        assert (codes[:10] == 0).all() and (codes[10:] == 1).all()

    def test_length_mismatch_errors(self):
        with pytest.raises(ValueError, match="entries"):
            balanced_bootstrap(two_class(3, 3), SampleSize((1, 1, 1)), RandomSource(0))

    def test_absent_class_errors(self):
        d = dataset_from_rows(ATTRS, [[0, "A"], [1, "A"]])
        with pytest.raises(ValueError, match="'B'"):
            balanced_bootstrap(d, SampleSize((1, 1)), RandomSource(0))

    def test_pure_function_of_inputs(self):
        d = two_class(40, 7)
        s = SampleSize((7, 7))
        a = balanced_bootstrap(d, s, RandomSource(11)).indices
        b = balanced_bootstrap(d, s, RandomSource(11)).indices
        assert (a == b).all()

    @given(
        n_a=st.integers(1, 40),
        n_b=st.integers(1, 40),
        s_a=st.integers(1, 60),
        s_b=st.integers(1, 60),
        seed=st.integers(0, 2**32),
    )
    @settings(max_examples=150, deadline=None)
    def test_exact_class_counts_property(self, n_a, n_b, s_a, s_b, seed):
        d = two_class(n_a, n_b)
        sample = balanced_bootstrap(d, SampleSize((s_a, s_b)), RandomSource(seed))
        codes = d.class_codes[sample.indices]
        assert int((codes == 0).sum()) == s_a
        assert int((codes == 1).sum()) == s_b


class TestDefaultSampleSize:
    def test_imbalanced_counts(self):
        dist = ClassDistribution(("A", "B"), (3012, 151), 3163)
        assert default_sample_size(dist).per_class == (151, 151)

    def test_already_balanced(self):
        dist = ClassDistribution(("A", "B"), (5, 5), 10)
        assert default_sample_size(dist).per_class == (5, 5)

    def test_extreme_imbalance(self):
        dist = ClassDistribution(("A", "B"), (1000, 1), 1001)
        assert default_sample_size(dist).per_class == (1, 1)

    def test_zero_count_errors(self):
        dist = ClassDistribution(("A", "B"), (4, 0), 4)
        with pytest.raises(ValueError, match="'B'"):
            default_sample_size(dist)
