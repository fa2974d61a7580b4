"""Imputation, normalization, and stratified splitting.

Transformers follow the scikit-learn estimator protocol (``fit`` /
``transform`` / ``get_params``), with fitted state stored in
trailing-underscore attributes. Thin functional wrappers mirror the
operations the pipeline and CLI call directly.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_float_matrix, as_label_vector
from .dataset import FEATURE_NAMES, IMPUTABLE_COLUMNS, Dataset
from .errors import ConfigError, DataError

IMPUTABLE_INDICES = tuple(FEATURE_NAMES.index(c) for c in IMPUTABLE_COLUMNS)


def _check_fitted(estimator, attribute):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} must be fitted before use"
        )


class ZeroAsMissingImputer(BaseEstimator, TransformerMixin):
    """Replace literal zeros with the training mean of non-zero entries.

    Only the configured columns are touched; by default these are the five
    physiological measurements that cannot truly be zero (glucose, blood
    pressure, skin thickness, insulin, BMI).
    """

    def __init__(self, columns=IMPUTABLE_INDICES):
        self.columns = columns

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        means = {}
        for col in self.columns:
            values = X[:, col]
            nonzero = values[values != 0.0]
            if nonzero.size == 0:
                raise DataError(
                    f"column {col} ({FEATURE_NAMES[col]}) has no non-zero "
                    "training entries to impute from"
                )
            means[col] = float(nonzero.mean())
        self.means_ = means
        self.fitted_on_ = X.shape[0]
        return self

    def transform(self, X):
        _check_fitted(self, "means_")
        X = as_float_matrix(X).copy()
        for col, mean in self.means_.items():
            column = X[:, col]
            column[column == 0.0] = mean
        return X


def impute_missing(train, test):
    """Impute both splits using statistics from the training split only."""
    imputer = ZeroAsMissingImputer().fit(train.X)
    train_out = Dataset(imputer.transform(train.X), train.y, train.synthetic_mask)
    test_out = Dataset(imputer.transform(test.X), test.y, test.synthetic_mask)
    return train_out, test_out


class MinMaxNormalizer(BaseEstimator, TransformerMixin):
    """Map each feature to [0, 1] by its training minimum and maximum.

    A constant feature maps to 0. Test rows may land outside [0, 1]."""

    kind = "minmax"

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        if X.shape[0] < 2:
            raise DataError("min-max normalization needs at least 2 rows")
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        self.fitted_on_ = X.shape[0]
        return self

    def transform(self, X):
        _check_fitted(self, "min_")
        X = as_float_matrix(X)
        span = self.max_ - self.min_
        out = np.zeros_like(X)
        nonconst = span != 0.0
        out[:, nonconst] = (X[:, nonconst] - self.min_[nonconst]) / span[nonconst]
        return out

    def inverse_transform(self, X):
        _check_fitted(self, "min_")
        X = as_float_matrix(X)
        return X * (self.max_ - self.min_) + self.min_

    def to_dict(self):
        _check_fitted(self, "min_")
        return {
            "kind": self.kind,
            "min": self.min_.tolist(),
            "max": self.max_.tolist(),
            "fitted_on": self.fitted_on_,
        }

    @classmethod
    def from_dict(cls, payload):
        normalizer = cls()
        normalizer.min_ = np.asarray(payload["min"], dtype=np.float64)
        normalizer.max_ = np.asarray(payload["max"], dtype=np.float64)
        normalizer.fitted_on_ = int(payload["fitted_on"])
        return normalizer


class StandardNormalizer(BaseEstimator, TransformerMixin):
    """Center to zero mean and scale to unit population standard deviation.

    A zero-variance feature maps to 0."""

    kind = "standard"

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        if X.shape[0] < 2:
            raise DataError("standardization needs at least 2 rows")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)  # population sigma (ddof=0)
        self.fitted_on_ = X.shape[0]
        return self

    def transform(self, X):
        _check_fitted(self, "mean_")
        X = as_float_matrix(X)
        out = np.zeros_like(X)
        nonconst = self.scale_ != 0.0
        out[:, nonconst] = (X[:, nonconst] - self.mean_[nonconst]) / self.scale_[
            nonconst
        ]
        return out

    def inverse_transform(self, X):
        _check_fitted(self, "mean_")
        X = as_float_matrix(X)
        return X * self.scale_ + self.mean_

    def to_dict(self):
        _check_fitted(self, "mean_")
        return {
            "kind": self.kind,
            "mean": self.mean_.tolist(),
            "stddev": self.scale_.tolist(),
            "fitted_on": self.fitted_on_,
        }

    @classmethod
    def from_dict(cls, payload):
        normalizer = cls()
        normalizer.mean_ = np.asarray(payload["mean"], dtype=np.float64)
        normalizer.scale_ = np.asarray(payload["stddev"], dtype=np.float64)
        normalizer.fitted_on_ = int(payload["fitted_on"])
        return normalizer


class LogNormalizer(BaseEstimator, TransformerMixin):
    """Apply the natural logarithm elementwise; inputs must be positive."""

    kind = "log"

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        self.fitted_on_ = X.shape[0]
        return self

    def transform(self, X):
        _check_fitted(self, "fitted_on_")
        X = as_float_matrix(X)
        if np.any(X <= 0.0):
            raise DataError("log normalization requires strictly positive values")
        return np.log(X)

    def inverse_transform(self, X):
        _check_fitted(self, "fitted_on_")
        return np.exp(as_float_matrix(X))

    def to_dict(self):
        _check_fitted(self, "fitted_on_")
        return {"kind": self.kind, "fitted_on": self.fitted_on_}

    @classmethod
    def from_dict(cls, payload):
        normalizer = cls()
        normalizer.fitted_on_ = int(payload["fitted_on"])
        return normalizer


_NORMALIZERS = {
    cls.kind: cls for cls in (MinMaxNormalizer, StandardNormalizer, LogNormalizer)
}


def make_normalizer(kind):
    try:
        return _NORMALIZERS[kind]()
    except KeyError:
        raise ConfigError(
            f"unknown normalizer kind {kind!r}; "
            f"choose from {sorted(_NORMALIZERS)}"
        ) from None


def normalizer_from_dict(payload):
    try:
        cls = _NORMALIZERS[payload["kind"]]
    except KeyError:
        raise ConfigError(f"unknown normalizer kind in payload: {payload!r}") from None
    return cls.from_dict(payload)


def fit_normalizer(X, kind="minmax"):
    return make_normalizer(kind).fit(X)


def apply_normalizer(normalizer, X):
    return normalizer.transform(X)


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    test: np.ndarray
    seed: int


def stratified_split(y, ratio=0.9, seed=0):
    """Seeded per-class split whose totals follow floor allocation.

    ``floor(N * ratio)`` rows go to train. Per-class test counts are the
    floor of each class's proportional share of the test total; any
    shortfall rows are drawn from the largest classes, so minority
    training rows are preserved. On the 768-row table at ratio 0.9 this
    yields a 691/77 split with train class counts 449/242.
    """
    y = as_label_vector(np.asarray(y))
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    n = y.shape[0]
    labels, counts = np.unique(y, return_counts=True)
    if labels.size < 2:
        raise DataError("stratified split requires both classes present")

    train_total = int(np.floor(n * ratio + 1e-9))
    test_total = n - train_total
    if train_total == 0 or test_total == 0:
        raise DataError(
            f"ratio {ratio} leaves an empty split for {n} rows"
        )

    test_counts = {
        label: int(count) * test_total // n
        for label, count in zip(labels, counts)
    }
    shortfall = test_total - sum(test_counts.values())
    by_size = sorted(
        zip(labels, counts),
        key=lambda item: (-item[1], item[0]),
    )
    for label, count in by_size:
        if shortfall == 0:
            break
        if (int(count) * test_total) % n != 0:
            test_counts[label] += 1
            shortfall -= 1
    if shortfall != 0:
        raise DataError("could not allocate stratified test rows")

    rng = np.random.Generator(np.random.PCG64(seed))
    train_idx, test_idx = [], []
    for label in labels:
        members = np.flatnonzero(y == label)
        members = members[rng.permutation(members.size)]
        k = test_counts[label]
        test_idx.append(members[:k])
        train_idx.append(members[k:])
    return SplitIndices(
        train=np.sort(np.concatenate(train_idx)),
        test=np.sort(np.concatenate(test_idx)),
        seed=seed,
    )


def split_train_test(dataset, ratio=0.9, seed=0):
    """Split a Dataset, returning (indices, train subset, test subset)."""
    indices = stratified_split(dataset.y, ratio=ratio, seed=seed)
    return indices, dataset.subset(indices.train), dataset.subset(indices.test)
