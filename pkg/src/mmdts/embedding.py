"""Lag embedding of a scalar series."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_series

__all__ = ["embed_lags", "embed_paths"]


def embed_lags(x, p: int) -> np.ndarray:
    """Rows ``(x_t, x_{t-1}, ..., x_{t-p})`` for ``t = p+1..T``, most recent first.

    Returns a C-contiguous ``(T - p, p + 1)`` array.
    """
    p = int(p)
    if p < 0:
        raise ValueError(f"lag order must be >= 0, got {p}")
    x = check_series(x)
    if p >= x.size:
        raise ValueError(f"lag order p={p} needs a series longer than p, got length {x.size}")
    return np.ascontiguousarray(sliding_window_view(x, p + 1)[:, ::-1])


def embed_paths(paths: np.ndarray, p: int) -> np.ndarray:
    """Embed every row of a ``(n_paths, length)`` array and stack the results."""
    paths = np.asarray(paths, dtype=float)
    if paths.shape[1] <= p:
        raise ValueError("paths too short for the requested lag order")
    win = sliding_window_view(paths, p + 1, axis=1)[:, :, ::-1]
    return np.ascontiguousarray(win.reshape(-1, p + 1))
