"""Gaussian kernel, median-heuristic bandwidth and the feasible squared MMD.

The squared MMD between a synthetic sample ``S`` (N rows) and an observed
sample ``O`` (T rows) is the V-statistic::

    mean_{i,i'} k(s_i, s_i') - 2 mean_{i,t} k(s_i, o_t) + mean_{t,t'} k(o_t, o_t')

with diagonal terms kept in both self-sums. The last term does not depend on
the model parameter and is cached by :func:`gram_self_mean`.

Kernel sums are evaluated block-wise: each block is a single matrix product
on augmented rows giving the exponent ``-||a - b||^2 / (2 sigma^2)`` directly,
followed by an in-place ``exp``. Block totals are combined with ``math.fsum``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from ._validation import check_sample

__all__ = [
    "KernelSpec",
    "CachedGramMean",
    "BandwidthError",
    "StaleCacheError",
    "gaussian_kernel",
    "median_heuristic",
    "kernel_sum",
    "kernel_self_sum",
    "gram_self_mean",
    "mmd2_v",
    "MMDCriterion",
    "sample_id",
]

MEDIAN_MAX_ROWS = 4000
_BLOCK = 128


class BandwidthError(ValueError):
    """Median heuristic undefined (fewer than two distinct rows)."""


class StaleCacheError(ValueError):
    """Cached observed-sample Gram mean does not belong to the given sample."""


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel ``exp(-||y - y'||^2 / (2 sigma^2))``."""

    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"bandwidth must be positive and finite, got {self.sigma}")

    @property
    def gamma(self) -> float:
        return 0.5 / (self.sigma * self.sigma)


@dataclass(frozen=True)
class CachedGramMean:
    value: float
    sample_id: str


def _spec(spec) -> KernelSpec:
    return spec if isinstance(spec, KernelSpec) else KernelSpec(float(spec))


def sample_id(sample: np.ndarray) -> str:
    arr = np.ascontiguousarray(sample, dtype=float)
    h = hashlib.blake2b(digest_size=16)
    h.update(str(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()


def gaussian_kernel(y, y2, spec: KernelSpec | float) -> float:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    y2 = np.atleast_1d(np.asarray(y2, dtype=float))
    if y.shape != y2.shape:
        raise ValueError(f"dimension mismatch: {y.shape} vs {y2.shape}")
    d = y - y2
    return math.exp(-_spec(spec).gamma * float(d @ d))


def median_heuristic(sample, max_rows: int = MEDIAN_MAX_ROWS, seed: int = 0) -> KernelSpec:
    """Bandwidth = median Euclidean distance over all pairs of rows.

    Samples larger than ``max_rows`` are uniformly subsampled (without
    replacement, fixed ``seed``) before taking the median.
    """
    y = check_sample(sample)
    if y.shape[0] < 2:
        raise BandwidthError("median heuristic needs at least two rows")
    if y.shape[0] > max_rows:
        idx = np.sort(np.random.default_rng(seed).choice(y.shape[0], max_rows, replace=False))
        y = y[idx]
    med = float(np.median(pdist(y)))
    if not med > 0:
        # more than half the pairs coincide; fall back to the median of non-zero distances
        d = pdist(y)
        d = d[d > 0]
        if d.size == 0:
            raise BandwidthError("all rows identical: bandwidth is degenerate")
        med = float(np.median(d))
    return KernelSpec(med)


def _augment(y: np.ndarray, gamma: float, left: bool) -> np.ndarray:
    # rows [2g*a, -g|a|^2, 1] . [b, 1, -g|b|^2] = -g|a - b|^2
    n, d = y.shape
    out = np.empty((n, d + 2))
    sq = -gamma * np.einsum("ij,ij->i", y, y)
    if left:
        out[:, :d] = (2.0 * gamma) * y
        out[:, d] = sq
        out[:, d + 1] = 1.0
    else:
        out[:, :d] = y
        out[:, d] = 1.0
        out[:, d + 1] = sq
    return out


def kernel_sum(a, b, spec: KernelSpec | float) -> float:
    """``sum_{i,j} k(a_i, b_j)``."""
    a = check_sample(a, "a")
    b = check_sample(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    g = _spec(spec).gamma
    la = _augment(a, g, True)
    rb = _augment(b, g, False).T.copy()
    parts = []
    for s in range(0, la.shape[0], _BLOCK):
        m = la[s : s + _BLOCK] @ rb
        np.minimum(m, 0.0, out=m)
        np.exp(m, out=m)
        parts.append(m.sum())
    return math.fsum(parts)


def kernel_self_sum(a, spec: KernelSpec | float) -> float:
    """``sum_{i,j} k(a_i, a_j)`` over the upper triangle, doubled, plus the diagonal."""
    a = check_sample(a, "a")
    g = _spec(spec).gamma
    la = _augment(a, g, True)
    ra = _augment(a, g, False)
    n = a.shape[0]
    parts = [float(n)]
    for s in range(0, n, _BLOCK):
        e = min(n, s + _BLOCK)
        m = la[s:e] @ ra[s:].T
        np.minimum(m, 0.0, out=m)
        np.exp(m, out=m)
        w = e - s
        # strictly-upper part of the diagonal block plus everything to its right
        head = m[:, :w]
        parts.append(2.0 * np.triu(head, 1).sum())
        if m.shape[1] > w:
            parts.append(2.0 * m[:, w:].sum())
    return math.fsum(parts)


def gram_self_mean(sample, spec: KernelSpec | float) -> CachedGramMean:
    """Exact ``(1/T^2) sum_{t,t'} k(y_t, y_t')`` tagged with the sample hash."""
    y = check_sample(sample)
    n = y.shape[0]
    return CachedGramMean(kernel_self_sum(y, spec) / (n * n), sample_id(y))


def mmd2_v(synthetic, observed, spec: KernelSpec | float, cache: CachedGramMean | None = None) -> float:
    """Feasible squared MMD (V-statistic) between two lag samples."""
    s = check_sample(synthetic, "synthetic")
    o = check_sample(observed, "observed")
    if s.shape[1] != o.shape[1]:
        raise ValueError(f"dimension mismatch: synthetic {s.shape[1]} vs observed {o.shape[1]}")
    if cache is None:
        cache = gram_self_mean(o, spec)
    elif cache.sample_id != sample_id(o):
        raise StaleCacheError("cached Gram mean was computed on a different observed sample")
    n, t = s.shape[0], o.shape[0]
    val = kernel_self_sum(s, spec) / (n * n) - 2.0 * kernel_sum(s, o, spec) / (n * t) + cache.value
    return max(val, 0.0) if val > -1e-12 else val


class MMDCriterion:
    """Squared MMD to a fixed observed sample, with the self term hoisted.

    Skips re-hashing the observed sample on every call, which matters inside
    the optimiser loop.
    """

    def __init__(self, observed, spec: KernelSpec | float | None = None):
        self.observed = check_sample(observed, "observed")
        self.spec = median_heuristic(self.observed) if spec is None else _spec(spec)
        self.cache = gram_self_mean(self.observed, self.spec)
        g = self.spec.gamma
        self._right = _augment(self.observed, g, False).T.copy()

    def __call__(self, synthetic) -> float:
        s = check_sample(synthetic, "synthetic")
        if s.shape[1] != self.observed.shape[1]:
            raise ValueError(
                f"dimension mismatch: synthetic {s.shape[1]} vs observed {self.observed.shape[1]}"
            )
        la = _augment(s, self.spec.gamma, True)
        parts = []
        for start in range(0, la.shape[0], _BLOCK):
            m = la[start : start + _BLOCK] @ self._right
            np.minimum(m, 0.0, out=m)
            np.exp(m, out=m)
            parts.append(m.sum())
        cross = math.fsum(parts)
        n, t = s.shape[0], self.observed.shape[0]
        val = kernel_self_sum(s, self.spec) / (n * n) - 2.0 * cross / (n * t) + self.cache.value
        return max(val, 0.0) if val > -1e-12 else val
