"""Input validation helpers shared by the estimator classes."""

import numpy as np

from .errors import DimensionMismatch, EmptyMatrix


def as_samples(x):
    """Coerce to a contiguous 1-D float64 array of audio samples."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected 1-D sample array, got shape {arr.shape}")
    return arr


def check_feature_matrix(X, dim=None):
    """Validate a T x D feature matrix: 2-D, non-empty, finite values only."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected T x D matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyMatrix("feature matrix has zero frames")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"expected {dim} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch("feature matrix contains non-finite values")
    return arr


def check_frame(x, dim):
    """Validate a single D-vector against a model dimension."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.shape[0] != dim:
        raise DimensionMismatch(f"expected frame of dimension {dim}, got {arr.shape[0]}")
    return arr
