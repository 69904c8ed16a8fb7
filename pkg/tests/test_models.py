import math

import numpy as np
import pytest
from scipy import stats

from mmdts import _recursions as rec
from mmdts.innovations import SeedPath
from mmdts.models import (
    THETA_STAR,
    ModelError,
    ModelSpec,
    RickerDivergenceError,
    Series,
    paths_from_innovations,
    project,
    simulate,
    simulate_arma,
    simulate_garch,
    simulate_nlma,
    simulate_ricker,
    simulate_sv,
)

S = SeedPath(11)


# --- SV ---------------------------------------------------------------------

def test_sv_zero_vol_of_vol_is_scaled_white_noise():
    a = simulate_sv((0.9, 0.0, 0.3), 500, seed=S)
    b = simulate_sv((0.0, 0.0, 1.0), 500, seed=S)
    np.testing.assert_allclose(a.values, 0.3 * b.values, rtol=0, atol=1e-15)


def test_sv_variance_lognormal_moment():
    x = simulate_sv((0.9, 0.1, 0.2), 10**5, seed=S).values
    target = 0.2**2 * math.exp(0.1**2 / (2 * (1 - 0.9**2)))
    assert abs(x.var() / target - 1) < 0.05


def test_sv_reduces_to_standard_normal():
    x = simulate_sv((0.0, 0.0, 1.0), 10**4, seed=S).values
    assert stats.kstest(x, "norm").pvalue > 0.01


def test_sv_rejects_unit_root():
    with pytest.raises(ModelError):
        simulate_sv((1.0, 0.1, 0.2), 10, seed=S)


def test_sv_case2_switches_only_eta():
    g = paths_from_innovations("sv", (0.0, 0.0, 1.0), {"v": np.ones((1, 3)), "eta": np.full((1, 3), 50.0), "z0": np.zeros(1)})
    np.testing.assert_array_equal(g, np.ones((1, 3)))


# --- GARCH ------------------------------------------------------------------

def test_garch_initial_variance_and_hand_recursion():
    omega, beta, alpha = 0.05, 0.92, 0.05
    h1 = omega / (1 - alpha - beta)
    assert h1 == pytest.approx(5 / 3, abs=1e-12)
    x, h = rec.garch_paths(omega, beta, alpha, np.zeros((1, 3)), h1)
    np.testing.assert_array_equal(x, 0.0)
    assert h[0, 0] == pytest.approx(5 / 3, abs=1e-12)
    assert h[0, 1] == pytest.approx(0.05 + 0.92 * 5 / 3, abs=1e-12)
    assert h[0, 1] == pytest.approx(1.58333, abs=1e-5)


def test_garch_unconditional_variance():
    x = simulate_garch(THETA_STAR["garch"], 10**5, seed=S).values
    assert abs(x.var() / (5 / 3) - 1) < 0.05


def test_garch_rejects_nonstationary():
    with pytest.raises(ModelError):
        simulate_garch((0.05, 0.5, 0.5), 10, seed=S)


# --- ARMA -------------------------------------------------------------------

def test_arma_zero_noise_fixed_point():
    x = simulate_arma((0.8, 0.15, 1e-300), 100, seed=S).values
    assert np.all(np.abs(x) < 1e-140)


def test_arma_variance_and_acf():
    phi, psi, s2 = THETA_STAR["arma"]
    x = simulate_arma((phi, psi, s2), 10**5, seed=S).values
    var = s2 * (1 + 2 * phi * psi + psi**2) / (1 - phi**2)
    assert abs(x.var() / var - 1) < 0.05
    rho1 = (1 + phi * psi) * (phi + psi) / (1 + 2 * phi * psi + psi**2)
    xc = x - x.mean()
    assert abs(xc[1:] @ xc[:-1] / (xc @ xc) - rho1) < 0.02


def test_arma_rejects_unit_root():
    with pytest.raises(ModelError):
        simulate_arma((-1.0, 0.1, 1.0), 10, seed=S)


# --- NL-MA ------------------------------------------------------------------

def test_nlma_psi_zero_is_innovation_stream():
    x = simulate_nlma(0.0, 50, seed=S).values
    innov = paths_from_innovations("nlma", (0.0,), {"u": np.arange(6.0)[None, :]})
    np.testing.assert_array_equal(innov[0], np.arange(1.0, 6.0))
    from mmdts.models import draw_innovations

    u = draw_innovations("nlma", 1, 50, "gaussian", S)["u"][0]
    np.testing.assert_array_equal(x, u[1:])


def test_nlma_hand_recursion():
    x = paths_from_innovations("nlma", (0.9,), {"u": np.array([[1.0, -1.0]])})
    assert x[0, 0] == pytest.approx(-0.1, abs=1e-15)


def test_nlma_mean():
    assert abs(simulate_nlma(0.9, 10**5, seed=S).values.mean() - 0.9) < 0.02


# --- Ricker -----------------------------------------------------------------

def test_ricker_deterministic_map():
    _, log_n, i, _ = rec.ricker_paths(0.0, 0.0, 1.0, np.zeros((1, 2)), np.full((1, 2), 0.5), 1e9)
    assert i == -1
    assert math.exp(log_n[0, 0]) == pytest.approx(math.exp(-1), abs=1e-12)
    assert math.exp(log_n[0, 0]) == pytest.approx(0.367879, abs=1e-6)


def test_poisson_zero_intensity():
    for u in (0.0, 0.3, 0.999999):
        assert rec._poisson_inverse(0.0, u) == 0


@pytest.mark.parametrize("lam", [0.5, 7.0, 45.0, 400.0])
def test_poisson_inversion_matches_law(lam):
    u = np.random.default_rng(1).random(20000)
    k = np.array([rec._poisson_inverse(lam, v) for v in u])
    assert abs(k.mean() - lam) < 4 * math.sqrt(lam / k.size)
    # inversion property: F(k-1) < u <= F(k)
    cdf = stats.poisson(lam).cdf
    assert np.all(cdf(k[:200]) >= u[:200] - 1e-9)
    assert np.all(cdf(k[:200] - 1) <= u[:200] + 1e-9)


def test_ricker_integer_valued_and_poisson_mean():
    theta = THETA_STAR["ricker"]
    innov_seed = S
    x = simulate_ricker(theta, 10**5, seed=innov_seed).values
    assert np.all(x == np.round(x)) and np.all(x >= 0)
    from mmdts.models import draw_innovations

    d = draw_innovations("ricker", 1, 10**5, "gaussian", innov_seed)
    _, log_n, _, _ = rec.ricker_paths(theta[0], theta[1], theta[2], d["u"], d["unif"], 1e9)
    assert abs(x.mean() / (7 * np.exp(log_n).mean()) - 1) < 0.05


def test_ricker_divergence_guard():
    with pytest.raises(RickerDivergenceError):
        simulate_ricker((5.0, 1.0, 1e7), 200, seed=S)


# --- dispatch, determinism ---------------------------------------------------

def test_dispatch_matches_direct_call():
    a = simulate(ModelSpec("nlma", (0.0,)), 100, seed=S)
    b = simulate_nlma(0.0, 100, seed=S)
    np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.parametrize("kind", list(THETA_STAR))
def test_determinism_and_seed_sensitivity(kind):
    spec = ModelSpec(kind, THETA_STAR[kind])
    a = simulate(spec, 300, seed=S)
    b = simulate(spec, 300, seed=S)
    c = simulate(spec, 300, seed=SeedPath(12))
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, c.values)


def test_series_rejects_nonfinite():
    with pytest.raises(ValueError):
        Series(np.array([1.0, np.nan]))


def _batch_se(x, stat, n_batches=100):
    vals = np.array([stat(b) for b in np.array_split(x, n_batches)])
    return stat(x), vals.std(ddof=1) / math.sqrt(n_batches)


@pytest.mark.parametrize("kind", list(THETA_STAR))
def test_stationarity_smoke(kind):
    x = simulate(ModelSpec(kind, THETA_STAR[kind]), 10**5, seed=SeedPath(5)).values
    h1, h2 = x[: x.size // 2], x[x.size // 2 :]
    for stat in (np.mean, np.var):
        m1, s1 = _batch_se(h1, stat)
        m2, s2 = _batch_se(h2, stat)
        assert abs(m1 - m2) < 3 * math.hypot(s1, s2), (kind, stat.__name__, m1, m2)


@pytest.mark.parametrize("kind", ["garch", "arma", "nlma"])
def test_case2_has_heavier_tails(kind):
    spec = ModelSpec(kind, THETA_STAR[kind])
    k1 = stats.kurtosis(simulate(spec, 10**5, "gaussian", S).values)
    k2 = stats.kurtosis(simulate(spec, 10**5, "t3", S).values)
    assert k2 > k1


def test_projection_keeps_garch_stationary():
    th = project("garch", np.array([0.1, 0.8, 0.5]))
    assert th[1] + th[2] <= 0.999 + 1e-12
    assert th[0] >= 1e-6


def test_modelspec_validates_dimension():
    with pytest.raises(ModelError):
        ModelSpec("garch", (0.1, 0.2))
