"""Imputation, normalizers, and the stratified split."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from diabnet.dataset import Dataset, binarize_pregnancies, records_to_dataset
from diabnet.errors import ConfigError, DataError
from diabnet.preprocessing import (
    IMPUTABLE_INDICES,
    LogNormalizer,
    MinMaxNormalizer,
    StandardNormalizer,
    ZeroAsMissingImputer,
    fit_normalizer,
    impute_missing,
    make_normalizer,
    normalizer_from_dict,
    split_train_test,
    stratified_split,
)


def eight_col(base_value, glucose_column):
    """An N×8 matrix, constant except the glucose column (index 1)."""
    X = np.full((len(glucose_column), 8), float(base_value))
    X[:, 1] = glucose_column
    return X


class TestImputer:
    def test_mean_of_nonzero_entries(self):
        X = eight_col(1.0, [0.0, 100.0, 140.0])
        out = ZeroAsMissingImputer().fit(X).transform(X)
        assert out[0, 1] == pytest.approx(120.0)
        np.testing.assert_array_equal(out[1:, 1], [100.0, 140.0])

    def test_test_rows_use_train_means(self):
        train = eight_col(1.0, [100.0, 140.0])
        test = eight_col(1.0, [0.0, 10.0])
        imputer = ZeroAsMissingImputer().fit(train)
        out = imputer.transform(test)
        assert out[0, 1] == pytest.approx(120.0)  # train mean, not test mean
        assert out[1, 1] == 10.0

    def test_column_without_zeros_unchanged(self):
        X = eight_col(2.0, [90.0, 110.0])
        np.testing.assert_array_equal(
            ZeroAsMissingImputer().fit(X).transform(X), X
        )

    def test_exempt_columns_untouched(self):
        X = np.ones((3, 8))
        X[:, 0] = 0.0  # pregnancies may legitimately be zero
        X[:, 6] = 0.0
        X[:, 7] = 0.0
        out = ZeroAsMissingImputer().fit(X).transform(X)
        np.testing.assert_array_equal(out[:, [0, 6, 7]], X[:, [0, 6, 7]])

    def test_nonzero_values_never_altered(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(1.0, 10.0, size=(20, 8))
        X[::3, 4] = 0.0
        out = ZeroAsMissingImputer().fit(X).transform(X)
        untouched = X != 0.0
        np.testing.assert_array_equal(out[untouched], X[untouched])

    def test_all_zero_column_is_an_error(self):
        X = np.ones((3, 8))
        X[:, 4] = 0.0
        with pytest.raises(DataError, match="insulin"):
            ZeroAsMissingImputer().fit(X)

    def test_requires_fit(self):
        with pytest.raises(NotFittedError):
            ZeroAsMissingImputer().transform(np.ones((2, 8)))

    def test_input_not_mutated(self):
        X = eight_col(1.0, [0.0, 100.0])
        ZeroAsMissingImputer().fit(X).transform(X)
        assert X[0, 1] == 0.0

    def test_impute_missing_wrapper(self):
        train = Dataset(eight_col(1.0, [100.0, 140.0]), [0, 1], [False, False])
        test = Dataset(eight_col(1.0, [0.0]), [1], [False])
        train_out, test_out = impute_missing(train, test)
        assert test_out.X[0, 1] == pytest.approx(120.0)
        np.testing.assert_array_equal(train_out.y, train.y)
        assert not test_out.synthetic_mask.any()

    def test_default_columns_are_the_five_physiological(self):
        assert IMPUTABLE_INDICES == (1, 2, 3, 4, 5)


class TestMinMaxNormalizer:
    def test_hand_example(self):
        X = np.array([[2.0], [4.0], [6.0]])
        out = MinMaxNormalizer().fit(X).transform(X)
        np.testing.assert_allclose(out.ravel(), [0.0, 0.5, 1.0])

    def test_training_rows_land_in_unit_interval_exactly(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 8)) * 50
        out = MinMaxNormalizer().fit(X).transform(X)
        assert out.min() == 0.0 and out.max() == 1.0

    def test_constant_feature_maps_to_zero(self):
        X = np.array([[3.0, 1.0], [3.0, 2.0]])
        out = MinMaxNormalizer().fit(X).transform(X)
        np.testing.assert_array_equal(out[:, 0], [0.0, 0.0])

    def test_test_rows_may_leave_unit_interval(self):
        normalizer = MinMaxNormalizer().fit(np.array([[0.0], [10.0]]))
        assert normalizer.transform(np.array([[15.0]]))[0, 0] == 1.5

    def test_inverse_recovers_input(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 5)) * 7 + 3
        normalizer = MinMaxNormalizer().fit(X)
        back = normalizer.inverse_transform(normalizer.transform(X))
        np.testing.assert_allclose(back, X, atol=1e-12)

    def test_needs_two_rows(self):
        with pytest.raises(DataError, match="at least 2 rows"):
            MinMaxNormalizer().fit(np.ones((1, 3)))

    def test_dict_round_trip(self):
        X = np.array([[1.0, 5.0], [3.0, 9.0]])
        normalizer = MinMaxNormalizer().fit(X)
        payload = normalizer.to_dict()
        assert payload["kind"] == "minmax" and payload["fitted_on"] == 2
        restored = normalizer_from_dict(payload)
        np.testing.assert_allclose(restored.transform(X), normalizer.transform(X))


class TestStandardNormalizer:
    def test_hand_example_population_sigma(self):
        X = np.array([[1.0], [2.0], [3.0]])
        out = StandardNormalizer().fit(X).transform(X)
        np.testing.assert_allclose(
            out.ravel(), [-1.2247, 0.0, 1.2247], atol=1e-4
        )

    def test_zero_mean_unit_sigma(self):
        rng = np.random.default_rng(3)
        X = rng.normal(5.0, 3.0, size=(100, 4))
        out = StandardNormalizer().fit(X).transform(X)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)

    def test_constant_feature_maps_to_zero(self):
        X = np.array([[3.0], [3.0]])
        out = StandardNormalizer().fit(X).transform(X)
        np.testing.assert_array_equal(out.ravel(), [0.0, 0.0])

    def test_inverse_recovers_input(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(25, 3)) * 11 - 2
        normalizer = StandardNormalizer().fit(X)
        back = normalizer.inverse_transform(normalizer.transform(X))
        np.testing.assert_allclose(back, X, atol=1e-12)

    def test_dict_round_trip(self):
        X = np.array([[1.0], [2.0], [6.0]])
        normalizer = StandardNormalizer().fit(X)
        restored = normalizer_from_dict(normalizer.to_dict())
        np.testing.assert_allclose(restored.transform(X), normalizer.transform(X))


class TestLogNormalizer:
    def test_unit_points(self):
        X = np.array([[1.0], [np.e]])
        out = LogNormalizer().fit(X).transform(X)
        np.testing.assert_allclose(out.ravel(), [0.0, 1.0])

    def test_domain_error(self):
        normalizer = LogNormalizer().fit(np.ones((2, 1)))
        with pytest.raises(DataError, match="positive"):
            normalizer.transform(np.array([[0.0]]))
        with pytest.raises(DataError, match="positive"):
            normalizer.transform(np.array([[-1.0]]))

    def test_inverse(self):
        X = np.array([[0.5], [2.0], [7.0]])
        normalizer = LogNormalizer().fit(X)
        np.testing.assert_allclose(
            normalizer.inverse_transform(normalizer.transform(X)), X, atol=1e-12
        )

    def test_dict_round_trip(self):
        payload = LogNormalizer().fit(np.ones((3, 1))).to_dict()
        assert payload == {"kind": "log", "fitted_on": 3}
        assert isinstance(normalizer_from_dict(payload), LogNormalizer)


class TestNormalizerFactory:
    @pytest.mark.parametrize(
        "kind, cls",
        [
            ("minmax", MinMaxNormalizer),
            ("standard", StandardNormalizer),
            ("log", LogNormalizer),
        ],
    )
    def test_kinds(self, kind, cls):
        assert isinstance(make_normalizer(kind), cls)
        assert make_normalizer(kind).kind == kind

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="unknown normalizer"):
            make_normalizer("robust")

    def test_fit_normalizer_helper(self):
        X = np.array([[0.0], [2.0]])
        assert fit_normalizer(X, "minmax").transform(X)[1, 0] == 1.0


class TestStratifiedSplit:
    def test_canonical_counts(self, pima_records):
        ds = records_to_dataset(binarize_pregnancies(pima_records))
        indices, train, test = split_train_test(ds, ratio=0.9, seed=0)
        assert (len(indices.train), len(indices.test)) == (691, 77)
        assert train.class_counts() == (449, 242)
        assert test.class_counts() == (51, 26)

    def test_same_seed_identical(self):
        y = np.array([0] * 30 + [1] * 14)
        a = stratified_split(y, 0.8, seed=7)
        b = stratified_split(y, 0.8, seed=7)
        np.testing.assert_array_equal(a.train, b.train)
        np.testing.assert_array_equal(a.test, b.test)
        assert a.seed == 7

    def test_different_seed_same_counts_different_rows(self):
        y = np.array([0] * 30 + [1] * 14)
        a = stratified_split(y, 0.8, seed=1)
        b = stratified_split(y, 0.8, seed=2)
        assert len(a.train) == len(b.train)
        assert not np.array_equal(a.train, b.train)

    def test_ten_row_toy_properties(self):
        y = np.array([0, 1, 0, 1, 0, 0, 1, 0, 0, 0])  # 7 zeros, 3 ones
        for seed in range(10):
            split = stratified_split(y, 0.7, seed=seed)
            merged = np.sort(np.concatenate([split.train, split.test]))
            np.testing.assert_array_equal(merged, np.arange(10))
            assert len(split.train) == 7
            for label, count in ((0, 7), (1, 3)):
                train_count = int(np.sum(y[split.train] == label))
                assert abs(train_count - count * 0.7) <= 1.0

    def test_single_class_rejected(self):
        with pytest.raises(DataError, match="both classes"):
            stratified_split(np.zeros(10), 0.9, seed=0)

    def test_bad_ratio_rejected(self):
        y = np.array([0, 1, 0, 1])
        for ratio in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(ConfigError, match="ratio"):
                stratified_split(y, ratio, seed=0)

    def test_degenerate_split_rejected(self):
        with pytest.raises(DataError, match="empty split"):
            stratified_split(np.array([0, 1]), 0.3, seed=0)

    @settings(max_examples=60, deadline=None)
    @given(
        n_zero=st.integers(min_value=2, max_value=120),
        n_one=st.integers(min_value=2, max_value=120),
        ratio=st.floats(min_value=0.2, max_value=0.9),
        seed=st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_split_properties_hold_generally(self, n_zero, n_one, ratio, seed):
        y = np.concatenate([np.zeros(n_zero), np.ones(n_one)])
        n = n_zero + n_one
        train_total = int(np.floor(n * ratio + 1e-9))
        assume(1 <= train_total <= n - 1)
        split = stratified_split(y, ratio, seed=seed)
        merged = np.sort(np.concatenate([split.train, split.test]))
        np.testing.assert_array_equal(merged, np.arange(n))
        assert len(split.train) == int(np.floor(n * ratio + 1e-9))
        for label, count in ((0.0, n_zero), (1.0, n_one)):
            test_count = int(np.sum(y[split.test] == label))
            exact = count * (len(split.test) / n)
            assert abs(test_count - exact) <= 1.0
