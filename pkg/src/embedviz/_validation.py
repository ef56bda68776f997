"""Small input-validation helpers shared by the estimators and functions."""

import numpy as np
from sklearn.utils import check_array


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


def as_matrix(X, name="X", min_rows=0):
    """Return ``X`` as a finite float64 2-D array."""
    try:
        arr = check_array(
            X,
            dtype=np.float64,
            ensure_2d=True,
            ensure_min_samples=0,
            ensure_min_features=0,
            ensure_all_finite=True,
        )
    except ValueError as exc:
        raise DataError(f"{name}: {exc}") from exc
    if arr.shape[0] < min_rows:
        raise DataError(f"{name}: need at least {min_rows} rows, got {arr.shape[0]}")
    return arr


def as_labels(labels, n, name="labels"):
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise DataError(f"{name}: expected {n} entries, got shape {arr.shape}")
    return arr.astype(np.int64, copy=False)


def check_unit_rows(Z, atol=1e-8, name="embeddings"):
    norms = np.linalg.norm(Z, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > atol)
    if bad.size:
        raise DataError(f"{name}: row {int(bad[0])} is not unit-norm (norm={norms[bad[0]]!r})")
