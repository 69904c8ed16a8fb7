"""Acceptance suite: one test per criterion, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary (see
``conftest.py``). Monte Carlo criteria use fixed seeds, so results replay.
Set ``MMDTS_RUN_HEAVY=1`` to run the full-scale RMSE-scaling check (6b).
"""

import math
import os
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest
from sklearn.exceptions import ConvergenceWarning

from mmdts.baselines import ParticleFilterConfig, nlma_moment, sv_particle_loglik
from mmdts.diagnostics import estimate_rho, halving_chain, iid_gaussian, mc_mmd_decay, mc_rmse_scaling
from mmdts.estimators import OptimConfig, SimScheme, adagrad_step, estimate_mmd, perturbed_start
from mmdts.innovations import SeedPath
from mmdts.kernel_mmd import KernelSpec, MMDCriterion, gaussian_kernel, median_heuristic, mmd2_v
from mmdts.lag_selection import select_lag
from mmdts.models import THETA_STAR, ModelSpec, simulate

HEAVY = os.environ.get("MMDTS_RUN_HEAVY") == "1"


def _naive_mmd2(a, b, sigma):
    def k(u, v):
        return math.exp(-sum((x - y) ** 2 for x, y in zip(u, v)) / (2 * sigma * sigma))

    n, t = len(a), len(b)
    aa = sum(k(a[i], a[j]) for i in range(n) for j in range(n))
    ab = sum(k(a[i], b[j]) for i in range(n) for j in range(t))
    bb = sum(k(b[i], b[j]) for i in range(t) for j in range(t))
    return aa / (n * n) - 2 * ab / (n * t) + bb / (t * t)


@pytest.mark.criterion("1", "MMD V-statistic equals a naive triple-loop oracle within 1e-12")
def test_c1_mmd_oracle(record_property):
    rng = np.random.default_rng(20240101)
    pairs = []
    for _ in range(200):
        d = int(rng.integers(1, 6))
        a = rng.normal(size=(int(rng.integers(1, 51)), d))
        b = rng.normal(0.3, 1.5, size=(int(rng.integers(1, 51)), d))
        pairs.append((a, b, float(rng.uniform(0.2, 4.0))))
    t0 = time.perf_counter()
    fast = [mmd2_v(a, b, KernelSpec(s)) for a, b, s in pairs]
    elapsed = time.perf_counter() - t0
    worst = max(abs(f - _naive_mmd2(a.tolist(), b.tolist(), s)) for f, (a, b, s) in zip(fast, pairs))
    record_property("detail", f"max |diff| = {worst:.2e}, runtime {elapsed:.2f}s")
    assert worst < 1e-12
    assert elapsed < 10


@pytest.mark.criterion("2", "exact identities: D2(S,S)=0, k(y,y)=1, median{0,1,3}=2, first adagrad step -0.025")
def test_c2_identities(record_property):
    rng = np.random.default_rng(2)
    s = rng.normal(size=(60, 3))
    d_ss = mmd2_v(s, s, median_heuristic(s))
    k_yy = gaussian_kernel(s[0], s[0], KernelSpec(0.7))
    med = median_heuristic([0.0, 1.0, 3.0]).sigma
    th, _ = adagrad_step(np.array([0.0]), np.array([2.0]), np.zeros(1), OptimConfig(R=0.025, epsilon=1e-6))
    record_property("detail", f"D2(S,S)={d_ss:.1e}, k(y,y)={k_yy}, sigma={med}, dtheta={th[0]:.10f}")
    assert abs(d_ss) < 1e-12
    assert k_yy == 1.0
    assert med == 2.0
    assert th[0] == pytest.approx(-0.025, abs=1e-8)


@pytest.mark.criterion("3", "particle filter collapses to the Gaussian log-likelihood within 1e-8")
def test_c3_pf_collapse(record_property):
    x = simulate(ModelSpec("sv", (0.0, 0.0, 0.2)), 1000, seed=SeedPath(3)).values
    exact = float(np.sum(-0.5 * np.log(2 * np.pi * 0.04) - x * x / (2 * 0.04)))
    t0 = time.perf_counter()
    diffs = [abs(sv_particle_loglik(x, (0.0, 0.0, 0.2), ParticleFilterConfig(K, SeedPath(K))) - exact) for K in (2, 100, 5000)]
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max |diff| = {max(diffs):.2e}, runtime {elapsed:.2f}s")
    assert max(diffs) < 1e-8
    assert elapsed < 5


@pytest.mark.criterion("4", "NL-MA: ISMMD-sgd mean |psi-0.9| < 0.1, moment estimator within 0.05 (20 batches)")
def test_c4_nlma(record_property):
    spec = ModelSpec("nlma", (0.9,))
    cfg = OptimConfig(iterations=500, theta0=perturbed_start("nlma", [0.9]))
    scheme = SimScheme("ismmd", N=1000, T0=100, resample="per-iter")
    mmd_err, moments = [], []
    for b in range(20):
        x = simulate(spec, 1000, "gaussian", SeedPath(4000, (b,)))
        res = estimate_mmd(x, spec, scheme, 20, cfg, "gaussian", SeedPath(4001, (b,)))
        mmd_err.append(abs(res.theta_hat[0] - 0.9))
        moments.append(nlma_moment(x))
    mean_err, mom = float(np.mean(mmd_err)), float(np.mean(moments))
    record_property("detail", f"mean |psi_hat-0.9| = {mean_err:.4f}, mean moment estimate = {mom:.4f}")
    assert mean_err < 0.1
    assert abs(mom - 0.9) < 0.05


@pytest.mark.criterion("5", "GARCH ISMMD mean l2 error at T=1000 below T=300 (20 batches, p=10, N=1000)")
def test_c5_garch_monotone(record_property):
    theta = np.array(THETA_STAR["garch"])
    spec = ModelSpec("garch", theta)
    cfg = OptimConfig(iterations=500, theta0=perturbed_start("garch", theta))
    scheme = SimScheme("ismmd", N=1000, T0=100)
    means = {}
    for T in (300, 1000):
        errs = []
        for b in range(20):
            x = simulate(spec, T, "gaussian", SeedPath(5000 + T, (b,)))
            res = estimate_mmd(x, spec, scheme, 10, cfg, "gaussian", SeedPath(5001 + T, (b,)))
            errs.append(np.linalg.norm(res.theta_hat - theta))
        means[T] = float(np.mean(errs))
    record_property("detail", f"mean l2: T=300 {means[300]:.4f}, T=1000 {means[1000]:.4f}")
    assert means[1000] < means[300]


@pytest.mark.criterion("6a", "halving chain: mean D ratio between T and 4T in [0.4, 0.7] (reps=200)")
def test_c6a_decay(record_property):
    rows = mc_mmd_decay(halving_chain, None, [250, 1000], reps=200, ref_size=20_000, seed=6)
    ratio = rows[1]["mean_D"] / rows[0]["mean_D"]
    below = all(r["mean_D"] <= r["bound"] + 2 * r["stderr"] for r in rows)
    record_property(
        "detail",
        f"ratio {ratio:.3f}; " + ", ".join(f"T={r['T']}: D={r['mean_D']:.4f} bound={r['bound']:.4f}" for r in rows),
    )
    assert 0.4 <= ratio <= 0.7
    assert below


@pytest.mark.criterion("6b", "ARMA ISMMD RMSE ratio T=1000 vs T=4000 with N=10T in [0.3, 0.8] (20 batches)")
def test_c6b_rmse_scaling(record_property):
    theta = THETA_STAR["arma"]
    spec = ModelSpec("arma", theta)
    if not HEAVY:
        # one criterion evaluation at the T=4000 / N=40000 cell, then project the full run
        x = simulate(spec, 4000, seed=SeedPath(60))
        crit = MMDCriterion(np.column_stack([x.values[1:], x.values[:-1]]))
        from mmdts.estimators import generate_synthetic

        y = generate_synthetic(spec, spec.theta, SimScheme("ismmd", 40_000), 1, "gaussian", SeedPath(61))
        t0 = time.perf_counter()
        crit(y)
        per_eval = time.perf_counter() - t0
        evals = 7 * 500 * 20  # (1 loss + 6 probes) x L x batches
        hours = per_eval * evals * (1 + 1 / 16) / 3600
        record_property("detail", f"not run: one evaluation at N=40000 takes {per_eval:.2f}s, projected {hours:.0f} CPU-hours")
        pytest.fail(
            f"full-scale run needs about {hours:.0f} CPU-hours on this machine "
            f"({per_eval:.2f}s per criterion evaluation); set MMDTS_RUN_HEAVY=1 to run it"
        )
    rows = mc_rmse_scaling(spec, theta, [1000, 4000], 10.0, 20, 1, "ismmd", OptimConfig(iterations=500), seed=66)
    ratio = rows[1]["rmse"] / rows[0]["rmse"]
    record_property("detail", f"RMSE {rows[0]['rmse']:.4f} -> {rows[1]['rmse']:.4f}, ratio {ratio:.3f}")
    assert 0.3 <= ratio <= 0.8


@pytest.mark.criterion("7", "lag selection on Case 2 ARMA (T=1000, p_max=20): p_hat <= 10 in >= 8 of 10 runs")
def test_c7_lag_selection(record_property):
    theta = THETA_STAR["arma"]
    cfg = OptimConfig(iterations=200, theta0=perturbed_start("arma", theta))
    p_hats = []
    for r in range(10):
        x = simulate(ModelSpec("arma", theta), 1000, "t3", SeedPath(7000, (r,)))
        rep = select_lag(x, "arma", SimScheme("ismmd", 1000), 20, cfg, "gaussian", SeedPath(7001, (r,)))
        p_hats.append(rep.p_hat)
    hits = sum(p <= 10 for p in p_hats)
    record_property("detail", f"p_hat = {p_hats}, {hits}/10 <= 10")
    assert hits >= 8


@pytest.mark.criterion("8", "dependence: iid rho within 3 stderr of 0 (t<=10); halving-chain ratios in [1.5, 2.7] (t<=5)")
def test_c8_dependence(record_property):
    iid = estimate_rho(iid_gaussian, None, t_max=10, reps=200, T_ref=2000, seed=8)
    z = iid.rho / iid.mc_stderr
    chain = estimate_rho(halving_chain, None, t_max=6, reps=200, T_ref=5000, seed=8)
    ratios = chain.rho[:5] / chain.rho[1:6]
    record_property("detail", f"iid max z = {z.max():.2f}; chain ratios {np.round(ratios, 3).tolist()}")
    assert np.all(z <= 3)
    assert np.all((ratios >= 1.5) & (ratios <= 2.7))


def _cli(*args, cwd):
    proc = subprocess.run([sys.executable, "-m", "mmdts.cli", *map(str, args)], cwd=cwd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


@pytest.mark.criterion("9", "every CLI subcommand gives byte-identical outputs on repeated runs")
def test_c9_cli_determinism(tmp_path, record_property):
    (tmp_path / "bench.toml").write_text(
        'model = "nlma"\nT = 200\nbatches = 2\np_grid = [1, 2]\niterations = 3\nseed = 9\n'
        '[[schemes]]\nkind = "ismmd"\nN = 50\nT0 = 20\n'
        '[[schemes]]\nkind = "psmmd"\nN = 50\nresample = "fixed"\n'
    )
    commands = {
        "simulate": ["simulate", "--model", "sv", "--T", 400, "--dist", "t3", "--seed", 9, "--out", "{d}/x.csv"],
        "estimate": ["estimate", "--data", "x.csv", "--model", "sv", "--N", 60, "--p", 2, "--iters", 3, "--seed", 9, "--out", "{d}/e.json"],
        "baseline": ["baseline", "--method", "sv-pf", "--K", 40, "--data", "x.csv", "--seed", 9, "--out", "{d}/b.json"],
        "lagselect": ["lagselect", "--data", "x.csv", "--model", "sv", "--pmax", 2, "--N", 40, "--iters", 2, "--n0", 300, "--seed", 9, "--out", "{d}/l.json"],
        "diagnose-rho": ["diagnose", "--check", "rho", "--reps", 3, "--t-max", 4, "--T-ref", 300, "--seed", 9, "--out", "{d}/r.csv"],
        "diagnose-decay": ["diagnose", "--check", "decay", "--reps", 3, "--T-grid", "50,100", "--ref-size", 800, "--seed", 9, "--out", "{d}/dd.csv"],
        "diagnose-scaling": ["diagnose", "--check", "scaling", "--source", "nlma", "--T-grid", 100, "--N-mult", 0.5, "--batches", 10, "--iters", 2, "--seed", 9, "--out", "{d}/s.csv"],
        "bench": ["bench", "--config", "bench.toml", "--out-dir", "{d}/bench"],
    }
    _cli("simulate", "--model", "sv", "--T", 400, "--dist", "t3", "--seed", 9, "--out", "x.csv", cwd=tmp_path)
    for run in ("a", "b"):
        (tmp_path / run).mkdir()
        for args in commands.values():
            _cli(*[a.format(d=run) if isinstance(a, str) else a for a in args], cwd=tmp_path)
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    differing = [str(f) for f in files if (tmp_path / "a" / f).read_bytes() != (tmp_path / "b" / f).read_bytes()]
    record_property("detail", f"{len(files)} files from {len(commands)} invocations, {len(differing)} differ")
    assert len(files) == 10
    assert not differing, differing


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
