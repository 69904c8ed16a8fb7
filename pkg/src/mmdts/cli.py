"""Command line entry point ``mmdts``.

Every output file records the root seed: CSV files in a leading ``#`` line,
JSON files under the ``seed`` key. Wall-clock timings are never written, so
repeated runs with the same arguments give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BASELINES, run_baseline
from .diagnostics import REF_SIZE_DEFAULT, estimate_rho, halving_chain, iid_gaussian, mc_mmd_decay, mc_rmse_scaling
from .estimators import OptimConfig, SimScheme, estimate_mmd
from .harness import emit_outputs, load_config, run_benchmark
from .innovations import SeedPath
from .lag_selection import N0_DEFAULT, select_lag
from .models import MODEL_KINDS, THETA_STAR, ModelSpec, simulate

log = logging.getLogger("mmdts")

GENERATORS = {"halving": halving_chain, "iid": iid_gaussian}


# ---------------------------------------------------------------------------
# io helpers
# ---------------------------------------------------------------------------


def read_series(path) -> np.ndarray:
    """First column of a CSV; ``#`` lines and a non-numeric header row are skipped."""
    values = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        first = line.split(",")[0]
        try:
            values.append(float(first))
        except ValueError:
            if values:
                raise ValueError(f"non-numeric value {first!r} in {path}") from None
    if not values:
        raise ValueError(f"no data in {path}")
    return np.asarray(values)


def _header(command: str, **fields) -> str:
    parts = " ".join(f"{k}={v}" for k, v in fields.items())
    return f"# mmdts {command} {parts}\n"


def _write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_table(path, header: str, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def _theta(text: str | None, kind: str) -> np.ndarray:
    if text is None:
        return np.asarray(THETA_STAR[kind], dtype=float)
    return np.asarray([float(v) for v in text.split(",")], dtype=float)


def _csv_floats(v) -> str:
    return ",".join(repr(float(x)) for x in v)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(a) -> None:
    theta = _theta(a.theta, a.model)
    series = simulate(ModelSpec(a.model, theta), a.T, a.dist, SeedPath(a.seed))
    head = _header("simulate", model=a.model, theta=_csv_floats(theta).replace(",", ";"), T=a.T, dist=a.dist, seed=a.seed)
    body = "".join(repr(float(v)) + "\n" for v in series.values)
    if a.out in (None, "-"):
        sys.stdout.write(head + body)
    else:
        Path(a.out).write_text(head + body)


def _scheme(a) -> SimScheme:
    return SimScheme(a.scheme, a.N, T0=a.T0, burn_in=a.burn_in, M=a.M, Nbar=a.Nbar, resample=a.resample)


def cmd_estimate(a) -> None:
    x = read_series(a.data)
    theta0 = None if a.theta0 is None else _theta(a.theta0, a.model)
    cfg = OptimConfig(iterations=a.iters, theta0=theta0)
    res = estimate_mmd(x, a.model, _scheme(a), a.p, cfg, a.dist, SeedPath(a.seed))
    payload = res.to_dict()
    payload["config"] = {
        "data": str(a.data),
        "model": a.model,
        "iterations": a.iters,
        "R": cfg.R,
        "epsilon": cfg.epsilon,
        "theta0": None if theta0 is None else [float(v) for v in theta0],
        "dist": a.dist,
    }
    payload["root_seed"] = a.seed
    _write_json(a.out, payload)


def cmd_baseline(a) -> None:
    x = read_series(a.data)
    theta = np.atleast_1d(run_baseline(a.method, x, SeedPath(a.seed), K=a.K, R=a.R))
    payload = {
        "method": a.method,
        "model": BASELINES[a.method],
        "theta_hat": [float(v) for v in theta],
        "data": str(a.data),
        "seed": [a.seed],
        "root_seed": a.seed,
    }
    if a.method == "sv-pf":
        payload["K"] = a.K
    elif a.method == "ricker-sl":
        payload["R"] = a.R
    _write_json(a.out, payload)


def cmd_lagselect(a) -> None:
    x = read_series(a.data)
    cfg = OptimConfig(iterations=a.iters)
    rep = select_lag(x, a.model, SimScheme(a.scheme, a.N), a.pmax, cfg, a.dist, SeedPath(a.seed), frac=a.frac, n0=a.n0)
    payload = rep.to_dict()
    payload.update(model=a.model, pmax=a.pmax, n0=a.n0, frac=a.frac, seed=[a.seed], root_seed=a.seed)
    _write_json(a.out, payload)


def _source(a):
    if a.source in GENERATORS:
        if a.theta is not None:
            raise ValueError("--theta applies to model sources only")
        return GENERATORS[a.source]
    return ModelSpec(a.source, _theta(a.theta, a.source))


def cmd_diagnose(a) -> None:
    seed = SeedPath(a.seed)
    head = _header("diagnose", check=a.check, source=a.source, seed=a.seed)
    if a.check == "rho":
        prof = estimate_rho(_source(a), None, a.t_max, a.reps, a.T_ref, a.p, a.dist, seed)
        rows = [
            {"t": t + 1, "rho": float(prof.rho[t]), "sigma_T": float(prof.sigma_T[t]), "mc_stderr": float(prof.mc_stderr[t])}
            for t in range(prof.rho.size)
        ]
        _write_table(a.out, head, ("t", "rho", "sigma_T", "mc_stderr"), rows)
    elif a.check == "decay":
        rows = mc_mmd_decay(_source(a), None, a.T_grid, a.reps, a.ref_size, a.p, a.dist, seed)
        _write_table(a.out, head, ("T", "mean_D", "stderr", "bound", "reps"), rows)
    else:
        src = _source(a)
        if not isinstance(src, ModelSpec):
            raise ValueError("--check scaling needs a model source")
        rows = mc_rmse_scaling(
            src, src.theta, a.T_grid, a.N_mult, a.batches, a.p, a.scheme, OptimConfig(iterations=a.iters), a.dist, seed
        )
        _write_table(a.out, head, ("T", "N", "rmse", "mean_l2", "batches", "failures"), rows)


def cmd_bench(a) -> None:
    cfg = load_config(a.config)
    emit_outputs(run_benchmark(cfg), a.out_dir)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmdts", description="Minimum-MMD estimation for time-series models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--seed", type=int, default=0, help="root seed (unsigned 64-bit)")
        sp.add_argument("--out", required=out_required, help="output file (stdout when omitted)")

    s = sub.add_parser("simulate", help="simulate a series to CSV")
    s.add_argument("--model", required=True, choices=MODEL_KINDS)
    s.add_argument("--theta", help="comma-separated parameters (default: benchmark value)")
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--dist", default="gaussian", choices=("gaussian", "t3"))
    common(s)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser(
        "estimate",
        help="minimum-MMD estimate",
        epilog="The exact (ideal) MMD criterion has no closed form for these models; only simulated criteria are offered.",
    )
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True, choices=MODEL_KINDS)
    e.add_argument("--scheme", default="ismmd", choices=("ismmd", "psmmd", "csmmd"))
    e.add_argument("--resample", default="per-iter", choices=("fixed", "per-iter"))
    e.add_argument("--N", type=int, default=1000)
    e.add_argument("--T0", type=int, default=100)
    e.add_argument("--burn-in", dest="burn_in", type=int, default=200)
    e.add_argument("--M", type=int)
    e.add_argument("--Nbar", type=int)
    e.add_argument("--p", type=int, default=1)
    e.add_argument("--iters", type=int, default=500)
    e.add_argument("--theta0", help="comma-separated starting point (default: centre of the bounds)")
    e.add_argument("--dist", default="gaussian", choices=("gaussian", "t3"), help="innovations used inside the simulator")
    common(e)
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("baseline", help="likelihood-type baseline estimate")
    b.add_argument("--method", required=True, choices=sorted(BASELINES))
    b.add_argument("--data", required=True)
    b.add_argument("--K", type=int, default=5000, help="particles for sv-pf")
    b.add_argument("--R", type=int, default=1000, help="replicates for ricker-sl")
    common(b)
    b.set_defaults(func=cmd_baseline)

    ls = sub.add_parser("lagselect", help="out-of-sample lag selection")
    ls.add_argument("--data", required=True)
    ls.add_argument("--model", required=True, choices=MODEL_KINDS)
    ls.add_argument("--pmax", type=int, default=10)
    ls.add_argument("--scheme", default="ismmd", choices=("ismmd", "psmmd"))
    ls.add_argument("--N", type=int, default=1000)
    ls.add_argument("--iters", type=int, default=500)
    ls.add_argument("--frac", type=float, default=0.75)
    ls.add_argument("--n0", type=int, default=N0_DEFAULT)
    ls.add_argument("--dist", default="gaussian", choices=("gaussian", "t3"))
    common(ls)
    ls.set_defaults(func=cmd_lagselect)

    d = sub.add_parser("diagnose", help="Monte Carlo dependence and rate checks")
    d.add_argument("--check", required=True, choices=("rho", "decay", "scaling"))
    d.add_argument("--source", default="halving", choices=sorted(GENERATORS) + list(MODEL_KINDS))
    d.add_argument("--theta")
    d.add_argument("--p", type=int, default=0)
    d.add_argument("--dist", default="gaussian", choices=("gaussian", "t3"))
    d.add_argument("--t-max", dest="t_max", type=int, default=20)
    d.add_argument("--reps", type=int, default=100)
    d.add_argument("--T-ref", dest="T_ref", type=int, default=2000)
    d.add_argument("--T-grid", dest="T_grid", type=_ints, default=[250, 1000])
    d.add_argument("--ref-size", dest="ref_size", type=int, default=REF_SIZE_DEFAULT)
    d.add_argument("--batches", type=int, default=20)
    d.add_argument("--N-mult", dest="N_mult", type=float, default=10.0)
    d.add_argument("--scheme", default="ismmd", choices=("ismmd", "psmmd"))
    d.add_argument("--iters", type=int, default=500)
    common(d)
    d.set_defaults(func=cmd_diagnose)

    bn = sub.add_parser("bench", help="batch benchmark from a TOML config")
    bn.add_argument("--config", required=True)
    bn.add_argument("--out-dir", dest="out_dir", required=True)
    bn.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"mmdts {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
