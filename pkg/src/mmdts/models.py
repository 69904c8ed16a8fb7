"""Forward simulators for the five parametric data-generating processes.

Each model is written as ``x = path(theta, innovations)``: the innovations are
drawn once (from a :class:`~mmdts.innovations.SeedPath`) and the deterministic
path map is then evaluated at any parameter value. Data generation and the
synthetic samples of the MMD estimators share this code, which is what makes
common random numbers across finite-difference probes possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _recursions as rec
from .innovations import InnovationDist, SeedPath, as_seed, draw_array

__all__ = [
    "MODEL_KINDS",
    "ModelSpec",
    "Series",
    "ModelError",
    "RickerDivergenceError",
    "default_bounds",
    "project",
    "draw_innovations",
    "paths_from_innovations",
    "simulate_sv",
    "simulate_garch",
    "simulate_arma",
    "simulate_nlma",
    "simulate_ricker",
    "simulate",
    "DEFAULT_BURN_IN",
    "THETA_STAR",
]

MODEL_KINDS = ("sv", "garch", "arma", "nlma", "ricker")
DEFAULT_BURN_IN = 200
MAX_INTENSITY = 1e9

PARAM_NAMES = {
    "sv": ("phi", "sigma_eta", "sigma_x"),
    "garch": ("omega", "beta", "alpha"),
    "arma": ("phi", "psi", "sigma2_u"),
    "nlma": ("psi",),
    "ricker": ("log_r", "sigma_u", "phi"),
}

# parameter values used throughout the experiments
THETA_STAR = {
    "sv": (0.9, 0.1, 0.2),
    "garch": (0.05, 0.92, 0.05),
    "arma": (0.8, 0.15, 0.05),
    "nlma": (0.9,),
    "ricker": (math.log(7.0), 0.05, 7.0),
}

_BOUNDS = {
    "sv": ((-0.999, 0.999), (0.0, 1.0), (1e-4, 2.0)),
    "garch": ((1e-6, 1.0), (0.0, 0.999), (0.0, 0.999)),
    "arma": ((-0.999, 0.999), (-0.999, 0.999), (1e-6, 1.0)),
    "nlma": ((-2.0, 2.0),),
    "ricker": ((0.0, 5.0), (0.0, 1.0), (1.0, 15.0)),
}
GARCH_PERSISTENCE_CAP = 0.999


class ModelError(ValueError):
    """Parameter outside the region where a simulator is defined."""


class RickerDivergenceError(ModelError):
    """Ricker Poisson intensity exceeded the overflow guard."""


def _kind(kind: str) -> str:
    k = str(kind).lower().replace("-", "").replace("_", "")
    if k not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return k


def default_bounds(kind: str) -> np.ndarray:
    return np.array(_BOUNDS[_kind(kind)], dtype=float)


def project(kind: str, theta, bounds=None) -> np.ndarray:
    """Project ``theta`` onto the model's box, plus the GARCH persistence cap."""
    kind = _kind(kind)
    b = default_bounds(kind) if bounds is None else np.asarray(bounds, dtype=float)
    th = np.clip(np.asarray(theta, dtype=float), b[:, 0], b[:, 1])
    if kind == "garch":
        excess = th[1] + th[2] - GARCH_PERSISTENCE_CAP
        if excess > 0:
            # Euclidean projection onto {beta + alpha <= cap}, then back into the box
            th[1:] -= excess / 2.0
            th[1:] = np.clip(th[1:], b[1:, 0], b[1:, 1])
            excess = th[1] + th[2] - GARCH_PERSISTENCE_CAP
            if excess > 0:
                i = 1 if th[1] >= th[2] else 2
                th[i] -= excess
    return th


@dataclass
class ModelSpec:
    """Model kind, parameter vector and box constraints."""

    kind: str
    theta: np.ndarray
    bounds: np.ndarray | None = None

    def __post_init__(self):
        self.kind = _kind(self.kind)
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if self.bounds is None:
            self.bounds = default_bounds(self.kind)
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.theta.shape != (len(PARAM_NAMES[self.kind]),):
            raise ModelError(
                f"{self.kind} expects {len(PARAM_NAMES[self.kind])} parameters, got {self.theta.shape}"
            )
        validate_theta(self.kind, self.theta)

    @property
    def dim(self) -> int:
        return self.theta.size

    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.kind]

    def with_theta(self, theta) -> "ModelSpec":
        return ModelSpec(self.kind, theta, self.bounds)


@dataclass
class Series:
    """An observed or simulated path together with how it was generated."""

    values: np.ndarray
    seed: SeedPath | None = None
    dist: InnovationDist | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("Series values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Series contains non-finite values")

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def validate_theta(kind: str, theta) -> None:
    kind = _kind(kind)
    th = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(th)):
        raise ModelError(f"{kind}: non-finite parameter {th}")
    if kind == "sv":
        phi, se, sx = th
        if abs(phi) >= 1:
            raise ModelError(f"sv: |phi| must be < 1, got {phi}")
        if se < 0 or sx <= 0:
            raise ModelError("sv: need sigma_eta >= 0 and sigma_x > 0")
    elif kind == "garch":
        omega, beta, alpha = th
        if omega <= 0 or alpha < 0 or beta < 0:
            raise ModelError("garch: need omega > 0 and alpha, beta >= 0")
        if alpha + beta >= 1:
            raise ModelError(f"garch: alpha + beta must be < 1, got {alpha + beta}")
    elif kind == "arma":
        phi, _, s2 = th
        if abs(phi) >= 1:
            raise ModelError(f"arma: |phi| must be < 1, got {phi}")
        if s2 <= 0:
            raise ModelError("arma: sigma2_u must be > 0")
    elif kind == "ricker":
        _, su, phi = th
        if su < 0 or phi <= 0:
            raise ModelError("ricker: need sigma_u >= 0 and phi > 0")


# ---------------------------------------------------------------------------
# innovations layout per model
# ---------------------------------------------------------------------------

# name -> (law, extra length); law None means "the requested dist"
_STREAMS = {
    "sv": (("v", "gaussian", 0), ("eta", None, 0), ("z0", "gaussian", None)),
    "garch": (("u", None, 0),),
    "arma": (("u", None, 0),),
    "nlma": (("u", None, 1),),
    "ricker": (("u", None, 0), ("unif", "uniform", 0)),
}


def draw_innovations(kind: str, n_paths: int, length: int, dist, seed) -> dict[str, np.ndarray]:
    """Innovation arrays for ``n_paths`` independent paths of ``length`` steps.

    Each named stream is drawn from its own child of ``seed``. Only the
    streams marked with the requested law switch between Gaussian and scaled
    t(3); e.g. the SV observation noise ``v`` stays Gaussian.
    """
    kind = _kind(kind)
    seed = as_seed(seed)
    out = {}
    for idx, (name, law, extra) in enumerate(_STREAMS[kind]):
        child = seed.derive(idx)
        if extra is None:
            shape = (n_paths,)
        else:
            shape = (n_paths, length + extra)
        if law == "uniform":
            out[name] = child.generator().random(shape)
        else:
            out[name] = draw_array(dist if law is None else law, shape, child)
    return out


def paths_from_innovations(kind: str, theta, innov: dict[str, np.ndarray], burn_in: int = 0) -> np.ndarray:
    """Evaluate the path map row-wise; returns ``(n_paths, length - burn_in)``."""
    kind = _kind(kind)
    th = np.asarray(theta, dtype=float)
    validate_theta(kind, th)
    if kind == "sv":
        x = rec.sv_paths(th[0], th[1], th[2], innov["v"], innov["eta"], innov["z0"])
    elif kind == "garch":
        omega, beta, alpha = th
        x, _ = rec.garch_paths(omega, beta, alpha, innov["u"], omega / (1.0 - alpha - beta))
    elif kind == "arma":
        x = rec.arma_paths(th[0], th[1], math.sqrt(th[2]), innov["u"])
    elif kind == "nlma":
        u = innov["u"]
        x = u[:, 1:] + th[0] * u[:, :-1] ** 2
    else:
        x = _ricker_x(th, innov["u"], innov["unif"])
    return x[:, burn_in:]


def _ricker_x(theta, u, unif) -> np.ndarray:
    log_r, sig_u, phi = theta
    x, _, i, t = rec.ricker_paths(log_r, sig_u, phi, u, unif, MAX_INTENSITY)
    if i >= 0:
        raise RickerDivergenceError(
            f"ricker: intensity phi*N_t exceeded {MAX_INTENSITY:g} at path {i}, step {t + 1}"
        )
    return x


def _simulate(kind, theta, T, dist, seed, burn_in) -> Series:
    dist = InnovationDist.parse(dist)
    seed = as_seed(seed)
    if T < 0:
        raise ValueError("T must be non-negative")
    innov = draw_innovations(kind, 1, T + burn_in, dist, seed)
    x = paths_from_innovations(kind, theta, innov, burn_in)[0]
    return Series(x, seed=seed, dist=dist, meta={"model": kind, "theta": list(map(float, theta))})


def simulate_sv(theta, T: int, dist="gaussian", seed=0) -> Series:
    """Stochastic volatility: ``x_t = s_x exp(h_t / 2) v_t``, ``h_t = phi h_{t-1} + s_eta eta_t``.

    ``h_0`` is drawn from the stationary law, so no burn-in is needed; only
    ``eta`` follows ``dist``.
    """
    return _simulate("sv", theta, T, dist, seed, 0)


def simulate_garch(theta, T: int, dist="gaussian", seed=0, burn_in: int = DEFAULT_BURN_IN) -> Series:
    """GARCH(1,1) with ``theta = (omega, beta, alpha)`` started at the unconditional variance."""
    return _simulate("garch", theta, T, dist, seed, burn_in)


def simulate_arma(theta, T: int, dist="gaussian", seed=0, burn_in: int = DEFAULT_BURN_IN) -> Series:
    """ARMA(1,1) with ``theta = (phi, psi, sigma2_u)`` started from zero."""
    return _simulate("arma", theta, T, dist, seed, burn_in)


def simulate_nlma(theta, T: int, dist="gaussian", seed=0) -> Series:
    """Non-linear MA(1): ``x_t = u_t + psi u_{t-1}^2`` with one presample innovation."""
    return _simulate("nlma", np.atleast_1d(theta), T, dist, seed, 0)


def simulate_ricker(theta, T: int, dist="gaussian", seed=0) -> Series:
    """Ricker map observed through Poisson noise, ``theta = (log r, sigma_u, phi)``, ``N_0 = 1``.

    Poisson draws use CDF inversion of a dedicated uniform stream, so paths
    move monotonically with the intensity under common random numbers.
    """
    return _simulate("ricker", theta, T, dist, seed, 0)


_SIMULATORS: dict[str, Callable[..., Series]] = {
    "sv": simulate_sv,
    "garch": simulate_garch,
    "arma": simulate_arma,
    "nlma": simulate_nlma,
    "ricker": simulate_ricker,
}


def simulate(spec: ModelSpec, T: int, dist="gaussian", seed=0) -> Series:
    """Dispatch to the simulator for ``spec.kind``."""
    return _SIMULATORS[spec.kind](spec.theta, T, dist, seed)
