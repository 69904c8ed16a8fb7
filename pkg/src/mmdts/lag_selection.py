"""Data-driven choice of the lag order through an out-of-sample MMD criterion.

For each candidate ``p`` the model is fitted on the first part of the
series, a long synthetic path is simulated at the fitted parameter, and its
MMD to the held-out embedded test sample is recorded. The selected lag is the
smallest ``p`` attaining the minimum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_series
from .embedding import embed_lags
from .estimators import OptimConfig, SimScheme, estimate_mmd, generate_synthetic
from .innovations import as_seed
from .kernel_mmd import MMDCriterion, median_heuristic
from .models import ModelSpec

logger = logging.getLogger(__name__)

__all__ = ["LagSelectionReport", "split_train_test", "select_lag", "LagSelector", "N0_DEFAULT"]

N0_DEFAULT = 10_000


@dataclass
class LagSelectionReport:
    p_hat: int
    curve: list[tuple[int, float]]
    split_index: int
    estimates: dict[int, list[float]]
    failures: dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "split_index": self.split_index,
            "curve": [{"p": p, "D": d} for p, d in self.curve],
            "estimates": {str(p): th for p, th in self.estimates.items()},
            "failures": {str(p): msg for p, msg in self.failures.items()},
        }


def split_train_test(x, frac: float = 0.75, p_max: int = 0):
    """Contiguous split at ``floor(frac * T)``; both parts must hold ``p_max + 2`` points."""
    if not 0 < frac < 1:
        raise ValueError(f"frac must lie in (0, 1), got {frac}")
    x = check_series(x)
    t0 = int(math.floor(frac * x.size))
    train, test = x[:t0], x[t0:]
    if min(train.size, test.size) < p_max + 2:
        raise ValueError(
            f"split at {t0} leaves segments of length {train.size} and {test.size}; need >= {p_max + 2}"
        )
    return train, test


def _argmin_smallest(curve: list[tuple[int, float]]) -> int:
    best_p, best_d = None, math.inf
    for p, d in sorted(curve):
        if d < best_d:
            best_p, best_d = p, d
    return best_p


def select_lag(
    x,
    spec: ModelSpec | str,
    scheme: SimScheme | None = None,
    p_max: int = 10,
    config: OptimConfig | None = None,
    dist="gaussian",
    seed=0,
    frac: float = 0.75,
    n0: int = N0_DEFAULT,
    synth_burn_in: int = 200,
) -> LagSelectionReport:
    """Pick ``p`` in ``0..p_max`` minimising ``D_p`` on the held-out segment.

    ``D_p`` is the (non-squared) MMD between ``n0`` embedded rows of one
    synthetic path at the fitted parameter and the embedded test segment,
    with the bandwidth taken from the test embedding.
    """
    seed = as_seed(seed)
    if p_max < 0:
        raise ValueError("p_max must be >= 0")
    kind = spec.kind if isinstance(spec, ModelSpec) else spec
    base = spec if isinstance(spec, ModelSpec) else None
    train, test = split_train_test(x, frac, p_max)
    curve, estimates, failures = [], {}, {}
    long_path = SimScheme("psmmd", N=n0, burn_in=synth_burn_in, resample="fixed")
    for p in range(p_max + 1):
        s = seed.derive(p)
        try:
            res = estimate_mmd(train, base or kind, scheme, p, config, dist, s.derive(0))
            theta = res.theta_hat
            test_rows = embed_lags(test, p)
            synth = generate_synthetic(ModelSpec(kind, theta), theta, long_path, p, "gaussian", s.derive(1))
            crit = MMDCriterion(test_rows, median_heuristic(test_rows))
            d = math.sqrt(max(crit(synth), 0.0))
        except Exception as exc:  # noqa: BLE001 - per-lag failures are recorded, not fatal
            logger.warning("lag %d failed: %s", p, exc)
            failures[p] = f"{type(exc).__name__}: {exc}"
            continue
        curve.append((p, d))
        estimates[p] = [float(v) for v in theta]
    if not curve:
        raise RuntimeError(f"lag selection failed for every p: {failures}")
    return LagSelectionReport(_argmin_smallest(curve), curve, len(train), estimates, failures)


class LagSelector(BaseEstimator):
    """Scikit-learn style wrapper around :func:`select_lag`; sets ``p_`` and ``report_``."""

    def __init__(self, model="arma", scheme="ismmd", N=1000, p_max=10, iterations=500, frac=0.75, n0=N0_DEFAULT, seed=0):
        self.model = model
        self.scheme = scheme
        self.N = N
        self.p_max = p_max
        self.iterations = iterations
        self.frac = frac
        self.n0 = n0
        self.seed = seed

    def fit(self, X, y=None):
        self.report_ = select_lag(
            X,
            self.model,
            SimScheme(self.scheme, self.N),
            self.p_max,
            OptimConfig(iterations=self.iterations),
            seed=self.seed,
            frac=self.frac,
            n0=self.n0,
        )
        self.p_ = self.report_.p_hat
        return self
