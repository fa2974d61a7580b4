"""Input-validation helpers used by the estimators and pipeline functions."""

import numpy as np

from .errors import DataError


def as_float_matrix(X, name="X"):
    """Coerce to a 2-D float64 array, rejecting non-finite values."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def as_label_vector(y, n_rows=None, name="y"):
    """Coerce to a 1-D array of {0,1} labels, optionally checking length."""
    arr = np.asarray(y, dtype=np.float64).ravel()
    if arr.size and not np.all(np.isin(arr, (0.0, 1.0))):
        raise DataError(f"{name} must contain only 0/1 labels")
    if n_rows is not None and arr.shape[0] != n_rows:
        raise DataError(
            f"{name} has {arr.shape[0]} entries but X has {n_rows} rows"
        )
    return arr


def check_feature_count(X, expected, name="X"):
    if X.shape[1] != expected:
        raise DataError(
            f"{name} has {X.shape[1]} features, expected {expected}"
        )
    return X


def check_positive_int(value, name):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise DataError(f"{name} must be an integer, got {value!r}")
    if value <= 0:
        raise DataError(f"{name} must be positive, got {value}")
    return int(value)
