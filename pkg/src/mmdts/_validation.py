"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np


def check_series(x, min_length: int = 1, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array.

    Accepts lists, arrays, :class:`~mmdts.models.Series` objects and
    single-column 2-D arrays (the sklearn ``X`` convention).
    """
    values = getattr(x, "values", x)
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a one-dimensional series, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def check_sample(y, name: str = "sample") -> np.ndarray:
    """Return a lag sample as a C-contiguous 2-D float array."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array of rows, got shape {arr.shape}")
    return np.ascontiguousarray(arr)
