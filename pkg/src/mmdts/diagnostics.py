"""Monte Carlo checks of the dependence and rate results at desk scale.

* :func:`estimate_rho` -- the kernel serial-dependence coefficients
  ``rho_t = |E k(y_0, y_t) - E k(Y, Y')|`` and their partial sums.
* :func:`mc_mmd_decay` -- mean ``D(P_T, P_0)`` against the bound
  ``sqrt((1 + 2 Sigma_T) / T)``, with ``P_0`` proxied by a long reference path.
* :func:`mc_rmse_scaling` -- RMSE of the MMD estimator across sample sizes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .embedding import embed_lags
from .estimators import OptimConfig, SimScheme, estimate_mmd, perturbed_start
from .innovations import SeedPath, as_seed
from .kernel_mmd import KernelSpec, MMDCriterion, median_heuristic
from .models import ModelSpec, simulate

logger = logging.getLogger(__name__)

__all__ = [
    "DependenceProfile",
    "halving_chain",
    "iid_gaussian",
    "estimate_rho",
    "mc_mmd_decay",
    "mc_rmse_scaling",
    "REF_SIZE_DEFAULT",
]

REF_SIZE_DEFAULT = 20_000
INF = math.inf

Source = ModelSpec | Callable[[int, SeedPath], np.ndarray]


@dataclass
class DependenceProfile:
    rho: np.ndarray
    sigma_T: np.ndarray
    mc_stderr: np.ndarray
    kernel_sigma: float

    def Sigma(self, T: int) -> float:
        """``sum_{s <= T} rho_s``, truncated at the estimated horizon."""
        if T < 1:
            return 0.0
        return float(self.sigma_T[min(T, self.sigma_T.size) - 1])


def halving_chain(T: int, seed: SeedPath | int = 0) -> np.ndarray:
    """``y_{t+1} = (y_t + eta_t) / 2`` with ``y_0 ~ U(0, 1)`` and Bernoulli(1/2) ``eta``.

    Not beta-mixing, yet its kernel dependence decays like ``2^{-t}``.
    """
    rng = as_seed(seed).generator()
    y0 = rng.random()
    eta = rng.integers(0, 2, size=T).astype(float)
    y = np.empty(T)
    cur = y0
    for t in range(T):
        cur = 0.5 * (cur + eta[t])
        y[t] = cur
    return y


def iid_gaussian(T: int, seed: SeedPath | int = 0) -> np.ndarray:
    return as_seed(seed).generator().standard_normal(T)


def _path(source: Source, T: int, dist, seed: SeedPath) -> np.ndarray:
    if isinstance(source, ModelSpec):
        return simulate(source, T, dist, seed).values
    return np.asarray(source(T, seed), dtype=float)


def _far_pair_mean(y: np.ndarray, gamma: float) -> float:
    # mean k(y_s, y_s') over pairs with s' - s > n/2
    n = y.shape[0]
    half = n // 2
    a = y[: n - half - 1]
    b = y[half + 1 :]
    d2 = (
        np.einsum("ij,ij->i", a, a)[:, None]
        + np.einsum("ij,ij->i", b, b)[None, :]
        - 2.0 * a @ b.T
    )
    k = np.exp(-gamma * np.maximum(d2, 0.0))
    iu = np.triu_indices(k.shape[0], 0, k.shape[1])
    return float(k[iu].mean())


def estimate_rho(
    source: Source,
    kernel: KernelSpec | float | None = None,
    t_max: int = 20,
    reps: int = 100,
    T_ref: int = 2000,
    p: int = 0,
    dist="gaussian",
    seed=0,
) -> DependenceProfile:
    """Estimate ``rho_t`` for ``t = 1..t_max`` from ``reps`` independent paths.

    Per path, ``E k(y_0, y_t)`` is the lag-``t`` average of kernel values and
    ``E k(Y, Y')`` the mean over pairs more than ``T_ref / 2`` apart. The
    reported ``rho_t`` is the absolute value of the replicate-averaged
    difference; ``mc_stderr`` is its Monte Carlo standard error (``inf`` when
    ``reps == 1``).
    """
    if t_max >= T_ref:
        raise ValueError("t_max must be smaller than T_ref")
    seed = as_seed(seed)
    diffs = np.empty((reps, t_max))
    spec = None if kernel is None else (kernel if isinstance(kernel, KernelSpec) else KernelSpec(float(kernel)))
    for r in range(reps):
        y = embed_lags(_path(source, T_ref + p, dist, seed.derive(r)), p)
        if spec is None:
            spec = median_heuristic(y)
        g = spec.gamma
        far = _far_pair_mean(y, g)
        for t in range(1, t_max + 1):
            d = y[t:] - y[:-t]
            diffs[r, t - 1] = np.exp(-g * np.einsum("ij,ij->i", d, d)).mean() - far
    mean = diffs.mean(axis=0)
    stderr = diffs.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.full(t_max, INF)
    rho = np.abs(mean)
    return DependenceProfile(rho, np.cumsum(rho), stderr, spec.sigma)


def mc_mmd_decay(
    source: Source,
    theta,
    T_grid,
    reps: int = 100,
    ref_size: int = REF_SIZE_DEFAULT,
    p: int = 0,
    dist="gaussian",
    seed=0,
    rho_t_max: int = 50,
    rho_reps: int | None = None,
) -> list[dict]:
    """Mean ``D(P_T, P_0-proxy)`` over ``reps`` paths per ``T`` next to its bound.

    ``P_0`` is proxied by ``ref_size`` embedded rows of one independent long
    path (``theta`` overrides the parameter of a ``ModelSpec`` source and
    must be ``None`` for a generator). The kernel bandwidth comes from that reference sample. The bound
    uses :func:`estimate_rho` with partial sums truncated at ``rho_t_max``.
    """
    seed = as_seed(seed)
    if theta is not None:
        if not isinstance(source, ModelSpec):
            raise TypeError("theta is only meaningful with a ModelSpec source")
        source = source.with_theta(theta)
    ref = embed_lags(_path(source, ref_size + p, dist, seed.derive(0)), p)
    spec = median_heuristic(ref)
    crit = MMDCriterion(ref, spec)
    T_grid = [int(T) for T in T_grid]
    t_max = max(1, min(rho_t_max, min(T_grid) - 1, 999))
    profile = estimate_rho(
        source, spec, t_max=t_max, reps=rho_reps or reps, T_ref=max(2 * t_max + 2, 2000), p=p, dist=dist, seed=seed.derive(1)
    )
    rows = []
    for i, T in enumerate(T_grid):
        ds = np.empty(reps)
        for r in range(reps):
            y = embed_lags(_path(source, T + p, dist, seed.derive(2).derive(i).derive(r)), p)
            ds[r] = math.sqrt(max(crit(y), 0.0))
        stderr = float(ds.std(ddof=1) / math.sqrt(reps)) if reps > 1 else INF
        rows.append(
            {
                "T": T,
                "mean_D": float(ds.mean()),
                "stderr": stderr,
                "bound": math.sqrt((1.0 + 2.0 * profile.Sigma(T)) / T),
                "reps": reps,
            }
        )
    return rows


def mc_rmse_scaling(
    spec: ModelSpec,
    theta_star,
    T_grid,
    N_rule: Callable[[int], int] | float = 10.0,
    batches: int = 20,
    p: int = 1,
    scheme_kind: str = "ismmd",
    config: OptimConfig | None = None,
    dist="gaussian",
    seed=0,
) -> list[dict]:
    """RMSE of the MMD estimator at ``theta_star`` for each ``T`` in ``T_grid``.

    ``N_rule`` maps ``T`` to the synthetic size (a number is read as the
    multiplier ``N = N_rule * T``). Each batch simulates fresh data; the
    optimiser starts from the perturbed ``theta_star``. Failed batches are
    counted and left out of the RMSE.
    """
    if batches < 10:
        raise ValueError(f"batches must be >= 10 for a meaningful RMSE, got {batches}")
    seed = as_seed(seed)
    theta_star = np.asarray(theta_star, dtype=float)
    rule = N_rule if callable(N_rule) else (lambda T, m=float(N_rule): int(round(m * T)))
    base = config or OptimConfig()
    cfg = OptimConfig(**{**base.__dict__, "theta0": perturbed_start(spec.kind, theta_star, bounds=spec.bounds)})
    rows = []
    for i, T in enumerate(T_grid):
        N = int(rule(T))
        scheme = SimScheme(scheme_kind, N)
        errs, failures = [], 0
        for b in range(batches):
            s = seed.derive(i).derive(b)
            try:
                x = simulate(spec.with_theta(theta_star), T, dist, s.derive(0))
                res = estimate_mmd(x, spec, scheme, p, cfg, "gaussian", s.derive(1))
            except Exception as exc:  # noqa: BLE001 - failed batches are counted, not fatal
                logger.warning("T=%d batch %d failed: %s", T, b, exc)
                failures += 1
                continue
            errs.append(float(np.linalg.norm(res.theta_hat - theta_star)))
        errs = np.asarray(errs)
        rows.append(
            {
                "T": int(T),
                "N": N,
                "rmse": float(np.sqrt(np.mean(errs**2))) if errs.size else math.nan,
                "mean_l2": float(errs.mean()) if errs.size else math.nan,
                "batches": batches,
                "failures": failures,
            }
        )
    return rows
