"""Simulation-based minimum-MMD estimation for stationary time series."""

from .embedding import embed_lags
from .estimators import (
    EstimationResult,
    MMDEstimator,
    OptimConfig,
    SimScheme,
    adagrad_step,
    estimate_mmd,
    generate_synthetic,
    ideal_mmd_available,
    numerical_gradient,
)
from .innovations import InnovationDist, SeedPath, derive, draw
from .kernel_mmd import KernelSpec, gaussian_kernel, gram_self_mean, median_heuristic, mmd2_v
from .models import (
    ModelSpec,
    Series,
    simulate,
    simulate_arma,
    simulate_garch,
    simulate_nlma,
    simulate_ricker,
    simulate_sv,
)

__version__ = "0.1.0"

__all__ = [
    "EstimationResult",
    "InnovationDist",
    "KernelSpec",
    "MMDEstimator",
    "ModelSpec",
    "OptimConfig",
    "SeedPath",
    "Series",
    "SimScheme",
    "adagrad_step",
    "derive",
    "draw",
    "embed_lags",
    "estimate_mmd",
    "gaussian_kernel",
    "generate_synthetic",
    "gram_self_mean",
    "ideal_mmd_available",
    "median_heuristic",
    "mmd2_v",
    "numerical_gradient",
    "simulate",
    "simulate_arma",
    "simulate_garch",
    "simulate_nlma",
    "simulate_ricker",
    "simulate_sv",
]
