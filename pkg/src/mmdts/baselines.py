"""Classical comparison estimators.

* GARCH(1,1) and ARMA(1,1): Gaussian quasi maximum likelihood.
* SV: simulated maximum likelihood with a bootstrap particle filter.
* Non-linear MA(1): the sample mean (``E x_t = psi``).
* Ricker: synthetic likelihood on eight summary statistics.

The simulated-likelihood optimisers keep their random numbers fixed across
parameter values so Nelder-Mead sees a deterministic objective.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.signal import lfilter
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning

from . import _recursions as rec
from ._validation import check_series
from .innovations import SeedPath, as_seed
from .models import MAX_INTENSITY, RickerDivergenceError, default_bounds, draw_innovations

logger = logging.getLogger(__name__)

__all__ = [
    "ParticleFilterConfig",
    "NelderMeadResult",
    "nelder_mead",
    "garch_qml",
    "arma_qml",
    "sv_particle_loglik",
    "sv_pf_mle",
    "nlma_moment",
    "ricker_summaries",
    "ricker_synthetic_loglik",
    "ricker_sl_mle",
    "BASELINES",
    "run_baseline",
    "BaselineEstimator",
]

LOGLIK_FLOOR = -1e300


@dataclass(frozen=True)
class ParticleFilterConfig:
    K: int = 5000
    seed: SeedPath = SeedPath(0)

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("particle filter needs K >= 2")
        object.__setattr__(self, "seed", as_seed(self.seed))


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool


def nelder_mead(f, theta0, bounds=None, tol: float = 1e-6, max_evals: int = 2000) -> NelderMeadResult:
    """Bounded Nelder-Mead (scipy) stopping when the simplex radius drops below ``tol``.

    Every probe is clipped into ``bounds``. Running out of evaluations is
    reported through ``converged=False`` rather than an exception.
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    b = None
    if bounds is not None:
        bounds = np.asarray(bounds, dtype=float)
        theta0 = np.clip(theta0, bounds[:, 0], bounds[:, 1])
        b = optimize.Bounds(bounds[:, 0], bounds[:, 1])
    res = optimize.minimize(
        f,
        theta0,
        method="Nelder-Mead",
        bounds=b,
        options={"xatol": tol, "fatol": np.inf, "maxfev": max_evals, "maxiter": 10 * max_evals},
    )
    x = res.x if bounds is None else np.clip(res.x, bounds[:, 0], bounds[:, 1])
    return NelderMeadResult(x, float(res.fun), int(res.nfev), bool(res.status == 0))


def _multistart(f, starts, bounds, tol, max_evals, label):
    best = None
    for s in starts:
        r = nelder_mead(f, s, bounds, tol, max_evals)
        if np.isfinite(r.fun) and (best is None or r.fun < best.fun):
            best = r
    if best is None:
        raise RuntimeError(f"{label}: objective not finite at any start")
    if not best.converged:
        warnings.warn(f"{label}: Nelder-Mead hit max_evals; returning best point found", ConvergenceWarning)
    return best


# ---------------------------------------------------------------------------
# GARCH / ARMA quasi maximum likelihood
# ---------------------------------------------------------------------------

_BIG = 1e12


def _garch_nll(theta, x, h1):
    omega, beta, alpha = theta
    if omega <= 0 or alpha < 0 or beta < 0 or alpha + beta >= 1:
        return _BIG
    h = rec.garch_variance(omega, beta, alpha, x, h1)
    return float(np.sum(np.log(h) + x * x / h))


def garch_qml(x, tol: float = 1e-7, max_evals: int = 2000) -> np.ndarray:
    """Gaussian QML for GARCH(1,1): minimise ``sum log h_t + x_t^2 / h_t``.

    The recursion starts at the sample variance; five deterministic starting
    points are tried and the best optimum is returned as ``(omega, beta, alpha)``.
    """
    x = check_series(x, min_length=50)
    v = float(np.var(x))
    if not v > 0:
        raise ValueError("garch_qml: series has zero variance")
    starts = [
        (v * (1 - b - a), b, a)
        for b, a in ((0.90, 0.05), (0.80, 0.10), (0.70, 0.20), (0.50, 0.30), (0.95, 0.03))
    ]
    bounds = np.array([[1e-8, 10 * v], [0.0, 0.9999], [0.0, 0.9999]])
    best = _multistart(lambda th: _garch_nll(th, x, v), starts, bounds, tol, max_evals, "garch_qml")
    return best.x


def _arma_css(theta, x):
    phi, psi = theta
    v = lfilter([1.0, -phi], [1.0, psi], x)
    return float(np.mean(v * v))


def arma_qml(x, tol: float = 1e-8, max_evals: int = 2000) -> np.ndarray:
    """Conditional-sum-of-squares Gaussian QML for ARMA(1,1).

    Residuals follow ``v_t = x_t - phi x_{t-1} - psi v_{t-1}`` from
    ``x_0 = v_0 = 0``; the innovation variance is profiled out as the mean
    squared residual. Returns ``(phi, psi, sigma2_u)``.
    """
    x = check_series(x, min_length=50)
    if not np.var(x) > 0:
        raise ValueError("arma_qml: series has zero variance")
    bounds = np.array([[-0.999, 0.999], [-0.999, 0.999]])
    starts = [(0.0, 0.0), (0.5, 0.0), (0.8, 0.2), (-0.5, 0.0), (0.3, 0.3)]
    best = _multistart(lambda th: math.log(_arma_css(th, x)), starts, bounds, tol, max_evals, "arma_qml")
    return np.array([best.x[0], best.x[1], _arma_css(best.x, x)])


# ---------------------------------------------------------------------------
# SV: bootstrap particle filter
# ---------------------------------------------------------------------------

def _pf_draws(T: int, K: int, seed: SeedPath):
    g_eta, g_z0, g_res = (seed.derive(i).generator() for i in range(3))
    return g_eta.standard_normal((T, K)), g_z0.standard_normal(K), g_res.standard_exponential((T, K + 1))


def sv_particle_loglik(x, theta, cfg: ParticleFilterConfig | None = None, _draws=None) -> float:
    """Bootstrap-filter estimate of the SV log-likelihood ``sum_t log(mean_i w_t^(i))``.

    Particles start from the stationary law of ``h``, propagate with Gaussian
    noise, are weighted by the Gaussian observation density and multinomially
    resampled at every step.
    """
    cfg = cfg or ParticleFilterConfig()
    x = check_series(x)
    phi, sig_eta, sig_x = map(float, theta)
    if abs(phi) >= 1:
        raise ValueError(f"sv_particle_loglik: |phi| must be < 1, got {phi}")
    if sig_x <= 0 or sig_eta < 0:
        return LOGLIK_FLOOR
    eta, z0, spacings = _pf_draws(x.size, cfg.K, cfg.seed) if _draws is None else _draws
    return float(rec.sv_bootstrap_filter(x, phi, sig_eta, sig_x, eta, z0, spacings))


def sv_pf_mle(x, cfg: ParticleFilterConfig | None = None, theta0=None, max_evals: int = 400, tol: float = 1e-4) -> np.ndarray:
    """Simulated MLE for the SV model; the filter's random numbers are fixed per call."""
    cfg = cfg or ParticleFilterConfig()
    x = check_series(x, min_length=10)
    draws = _pf_draws(x.size, cfg.K, cfg.seed)
    bounds = default_bounds("sv")
    if theta0 is None:
        sx = float(np.std(x))
        theta0 = (0.8, 0.2, max(sx, 1e-3))

    def nll(th):
        if abs(th[0]) >= 1:
            return _BIG
        return -sv_particle_loglik(x, th, cfg, draws)

    return _multistart(nll, [theta0], bounds, tol, max_evals, "sv_pf_mle").x


# ---------------------------------------------------------------------------
# NL-MA moment estimator
# ---------------------------------------------------------------------------

def nlma_moment(x) -> float:
    """Sample mean, which estimates ``psi`` because ``E x_t = psi E u^2 = psi``."""
    return float(np.mean(check_series(x)))


# ---------------------------------------------------------------------------
# Ricker: synthetic likelihood
# ---------------------------------------------------------------------------

SUMMARY_NAMES = (
    "mean",
    "variance",
    "mean_diff",
    "variance_diff",
    "acf1",
    "acf2",
    "acf1_diff",
    "mean_sq_diff",
)


def _acf(x: np.ndarray, k: int) -> np.ndarray:
    # x: (..., T); population-denominator autocorrelation
    xc = x - x.mean(axis=-1, keepdims=True)
    den = np.einsum("...t,...t->...", xc, xc)
    num = np.einsum("...t,...t->...", xc[..., :-k], xc[..., k:])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def _summaries(x: np.ndarray) -> np.ndarray:
    d = np.diff(x, axis=-1)
    return np.stack(
        [
            x.mean(axis=-1),
            x.var(axis=-1),
            d.mean(axis=-1),
            d.var(axis=-1),
            _acf(x, 1),
            _acf(x, 2),
            _acf(d, 1),
            (d * d).mean(axis=-1),
        ],
        axis=-1,
    )


def ricker_summaries(x) -> np.ndarray:
    """The eight summary statistics in :data:`SUMMARY_NAMES` order (variances use denominator T)."""
    x = check_series(x, min_length=4)
    if not np.var(x) > 0:
        raise ValueError("ricker_summaries: zero-variance series")
    return _summaries(x)


def _ricker_draws(R: int, T: int, seed: SeedPath):
    return draw_innovations("ricker", R, T, "gaussian", seed)


def ricker_synthetic_loglik(x, theta, R: int = 1000, cfg: ParticleFilterConfig | SeedPath | int | None = None, _draws=None, _s_obs=None) -> float:
    """Gaussian synthetic log-likelihood of the observed summaries (additive constant dropped).

    ``R`` datasets of the observed length are simulated at ``theta`` with
    Gaussian innovations; the covariance gets ``1e-8 * diag`` added before the
    Cholesky factorisation.
    """
    if R <= 9:
        raise ValueError("synthetic likelihood needs R > 9")
    seed = as_seed(cfg.seed if isinstance(cfg, ParticleFilterConfig) else cfg)
    x = check_series(x, min_length=4)
    s_obs = ricker_summaries(x) if _s_obs is None else _s_obs
    innov = _ricker_draws(R, x.size, seed) if _draws is None else _draws
    log_r, sig_u, phi = map(float, theta)
    xs, _, i, t = rec.ricker_paths(log_r, sig_u, phi, innov["u"], innov["unif"], MAX_INTENSITY)
    if i >= 0:
        raise RickerDivergenceError(f"ricker: intensity diverged in replicate {i} at step {t + 1}")
    s = _summaries(xs)
    mu = s.mean(axis=0)
    cov = np.cov(s, rowvar=False)
    cov = cov + 1e-8 * np.diag(np.diag(cov))
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("synthetic likelihood: summary covariance is singular") from exc
    z = np.linalg.solve(chol, s_obs - mu)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (float(z @ z) + logdet)


def ricker_sl_mle(x, cfg: ParticleFilterConfig | SeedPath | int | None = None, R: int = 1000, theta0=None, max_evals: int = 300, tol: float = 1e-3) -> np.ndarray:
    """Maximise the synthetic likelihood with a fixed replicate seed."""
    seed = as_seed(cfg.seed if isinstance(cfg, ParticleFilterConfig) else cfg)
    x = check_series(x, min_length=4)
    s_obs = ricker_summaries(x)
    draws = _ricker_draws(R, x.size, seed)
    bounds = default_bounds("ricker")
    if theta0 is None:
        theta0 = (math.log(5.0), 0.2, max(float(np.mean(x)), 1.0) * 1.0)
        theta0 = np.clip(theta0, bounds[:, 0], bounds[:, 1])

    def nll(th):
        try:
            return -ricker_synthetic_loglik(x, th, R, seed, draws, s_obs)
        except (np.linalg.LinAlgError, RickerDivergenceError, ValueError):
            return _BIG

    return _multistart(nll, [theta0], bounds, tol, max_evals, "ricker_sl_mle").x


# ---------------------------------------------------------------------------
# dispatch + sklearn-style wrapper
# ---------------------------------------------------------------------------

BASELINES = {
    "garch-qml": "garch",
    "arma-qml": "arma",
    "sv-pf": "sv",
    "nlma-moment": "nlma",
    "ricker-sl": "ricker",
}
MODEL_BASELINE = {v: k for k, v in BASELINES.items()}


def run_baseline(method: str, x, seed=0, K: int = 5000, R: int = 1000) -> np.ndarray:
    """Run a baseline by CLI name; returns the parameter vector."""
    seed = as_seed(seed)
    if method == "garch-qml":
        return garch_qml(x)
    if method == "arma-qml":
        return arma_qml(x)
    if method == "sv-pf":
        return sv_pf_mle(x, ParticleFilterConfig(K, seed))
    if method == "nlma-moment":
        return np.array([nlma_moment(x)])
    if method == "ricker-sl":
        return ricker_sl_mle(x, seed, R=R)
    raise ValueError(f"unknown baseline {method!r}; expected one of {sorted(BASELINES)}")


class BaselineEstimator(BaseEstimator):
    """Scikit-learn style wrapper: ``BaselineEstimator("garch-qml").fit(x).theta_``."""

    def __init__(self, method: str = "garch-qml", seed: int = 0, K: int = 5000, R: int = 1000):
        self.method = method
        self.seed = seed
        self.K = K
        self.R = R

    def fit(self, X, y=None):
        self.theta_ = np.atleast_1d(run_baseline(self.method, X, self.seed, self.K, self.R))
        return self
