"""Batch benchmark of MMD estimators against the likelihood-type baselines.

A run is described by a TOML file::

    model = "garch"
    theta_star = [0.05, 0.92, 0.05]
    case = 1            # 1: Gaussian data, 2: scaled t(3) data
    T = 1000
    batches = 100
    p_grid = [1, 2, 3]  # optional; defaults to 1..15 (1..40 for nlma)
    baseline = true
    seed = 0
    iterations = 500
    start = "perturbed" # or "midpoint"

    [[schemes]]
    kind = "ismmd"      # ismmd | psmmd | csmmd
    N = 1000
    resample = "per-iter"

Estimators always simulate with Gaussian innovations, so case 2 measures
misspecification; errors are taken against the same ``theta_star``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import MODEL_BASELINE, run_baseline
from .estimators import OptimConfig, SimScheme, estimate_mmd, perturbed_start
from .innovations import SeedPath
from .models import THETA_STAR, ModelSpec, simulate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

__all__ = [
    "BenchmarkConfig",
    "BenchmarkReport",
    "CSV_COLUMNS",
    "default_p_grid",
    "emit_outputs",
    "load_config",
    "parse_csv",
    "read_csv",
    "run_benchmark",
    "write_csv",
    "write_svg",
]

CSV_COLUMNS = ("method", "p", "N", "mean_l2", "stderr", "failures")
CASE_DIST = {1: "gaussian", 2: "t3"}


def default_p_grid(kind: str) -> list[int]:
    return list(range(1, 41 if kind == "nlma" else 16))


@dataclass
class BenchmarkConfig:
    model: str
    theta_star: list[float] | None = None
    case: int = 1
    T: int = 1000
    batches: int = 100
    p_grid: list[int] | None = None
    schemes: list[dict] = field(default_factory=lambda: [{"kind": "ismmd", "N": 1000}])
    baseline: bool = True
    seed: int = 0
    iterations: int = 500
    start: str = "perturbed"
    pf_particles: int = 5000
    sl_replicates: int = 1000

    def __post_init__(self):
        self.model = self.model.lower()
        if self.theta_star is None:
            self.theta_star = list(THETA_STAR[self.model])
        self.theta_star = [float(v) for v in self.theta_star]
        ModelSpec(self.model, self.theta_star)  # validates kind and theta
        if self.case not in CASE_DIST:
            raise ValueError(f"case must be 1 or 2, got {self.case}")
        if self.batches < 1:
            raise ValueError("batches must be >= 1")
        if self.p_grid is None:
            self.p_grid = default_p_grid(self.model)
        self.p_grid = [int(p) for p in self.p_grid]
        if not self.p_grid or min(self.p_grid) < 0:
            raise ValueError("p_grid must be a nonempty list of non-negative lags")
        if self.start not in ("perturbed", "midpoint"):
            raise ValueError(f"start must be 'perturbed' or 'midpoint', got {self.start!r}")
        for s in self.schemes:
            SimScheme(**s)

    @property
    def dist(self) -> str:
        return CASE_DIST[self.case]

    def sim_schemes(self) -> list[SimScheme]:
        return [SimScheme(**s) for s in self.schemes]

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> BenchmarkConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    unknown = set(raw) - set(BenchmarkConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return BenchmarkConfig(**raw)


def _label(s: SimScheme) -> str:
    return s.kind + ("-sgd" if s.resample == "per-iter" else "")


@dataclass
class BenchmarkReport:
    rows: list[dict]
    meta: dict

    def to_dict(self) -> dict:
        return {"meta": self.meta, "rows": self.rows}


def _aggregate(errors: list[float], failures: int) -> tuple[float, float]:
    e = np.asarray(errors, dtype=float)
    mean = float(e.mean()) if e.size else math.nan
    stderr = float(e.std(ddof=1) / math.sqrt(e.size)) if e.size > 1 else math.inf
    return mean, stderr


def run_benchmark(cfg: BenchmarkConfig) -> BenchmarkReport:
    """Run every (scheme, p) cell and the baseline on ``cfg.batches`` simulated series."""
    root = SeedPath(cfg.seed)
    theta_star = np.asarray(cfg.theta_star)
    spec = ModelSpec(cfg.model, theta_star)
    schemes = cfg.sim_schemes()
    theta0 = perturbed_start(cfg.model, theta_star) if cfg.start == "perturbed" else None
    ocfg = OptimConfig(iterations=cfg.iterations, theta0=theta0)
    errs = {(j, p): [] for j in range(len(schemes)) for p in cfg.p_grid}
    fails = {k: 0 for k in errs}
    base_errs, base_fails = [], 0
    base_method = MODEL_BASELINE[cfg.model] if cfg.baseline else None

    for b in range(cfg.batches):
        bs = root.derive(b)
        x = simulate(spec, cfg.T, cfg.dist, bs.derive(0))
        for j, scheme in enumerate(schemes):
            for p in cfg.p_grid:
                try:
                    res = estimate_mmd(x, spec, scheme, p, ocfg, "gaussian", bs.derive(1).derive(j).derive(p))
                    errs[(j, p)].append(float(np.linalg.norm(res.theta_hat - theta_star)))
                except Exception as exc:  # noqa: BLE001 - one failed cell must not stop the run
                    logger.warning("batch %d %s p=%d failed: %s", b, _label(scheme), p, exc)
                    fails[(j, p)] += 1
        if base_method:
            try:
                th = run_baseline(base_method, x, bs.derive(2), cfg.pf_particles, cfg.sl_replicates)
                base_errs.append(float(np.linalg.norm(th - theta_star)))
            except Exception as exc:  # noqa: BLE001
                logger.warning("batch %d %s failed: %s", b, base_method, exc)
                base_fails += 1

    rows = []
    for j, scheme in enumerate(schemes):
        for p in cfg.p_grid:
            mean, se = _aggregate(errs[(j, p)], fails[(j, p)])
            rows.append({"method": _label(scheme), "p": p, "N": scheme.N, "mean_l2": mean, "stderr": se, "failures": fails[(j, p)]})
    if base_method:
        mean, se = _aggregate(base_errs, base_fails)
        for p in cfg.p_grid:
            rows.append({"method": base_method, "p": p, "N": 0, "mean_l2": mean, "stderr": se, "failures": base_fails})
    meta = {"config": cfg.to_dict(), "dist": cfg.dist, "seed": root.to_list()}
    return BenchmarkReport(rows, meta)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _comment(meta: dict) -> str:
    cfg = meta.get("config", {})
    keys = ("model", "case", "T", "batches", "seed")
    return "# " + " ".join(f"{k}={cfg[k]}" for k in keys if k in cfg) + "\n"


def write_csv(report: BenchmarkReport, path=None) -> str:
    """Fixed column order; a leading ``#`` line records the run metadata and seed."""
    buf = io.StringIO()
    if report.meta:
        buf.write(_comment(report.meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path) -> list[dict]:
    return parse_csv(Path(path).read_text())


def parse_csv(text: str) -> list[dict]:
    """Parse report CSV text back into row dicts with native types."""
    body = "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
    rows = []
    for rec in csv.DictReader(io.StringIO(body)):
        rows.append(
            {
                "method": rec["method"],
                "p": int(rec["p"]),
                "N": int(rec["N"]),
                "mean_l2": float(rec["mean_l2"]),
                "stderr": float(rec["stderr"]),
                "failures": int(rec["failures"]),
            }
        )
    return rows


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def write_svg(report: BenchmarkReport, path=None, width: int = 640, height: int = 400) -> str:
    """Line plot of mean l2 error against p, one polyline per (method, N) series."""
    series: dict[str, list[tuple[int, float]]] = {}
    for r in report.rows:
        key = r["method"] if r["N"] == 0 else f"{r['method']} N={r['N']}"
        if math.isfinite(r["mean_l2"]):
            series.setdefault(key, []).append((r["p"], r["mean_l2"]))
    pad = 50
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    pts = [pt for s in series.values() for pt in s]
    if pts:
        ps = [p for p, _ in pts]
        es = [e for _, e in pts]
        p_lo, p_hi = min(ps), max(ps)
        e_hi = max(es) * 1.05 or 1.0
        sx = (width - 2 * pad) / max(p_hi - p_lo, 1)
        sy = (height - 2 * pad) / e_hi

        def xy(p, e):
            return f"{pad + (p - p_lo) * sx:.2f},{height - pad - e * sy:.2f}"

        out.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>')
        out.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
        out.append(f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="12">p</text>')
        out.append(f'<text x="14" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 14 {height / 2:.0f})">mean l2 error</text>')
        out.append(f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="10">{e_hi:.3g}</text>')
        for i, (name, s) in enumerate(series.items()):
            colour = _PALETTE[i % len(_PALETTE)]
            coords = " ".join(xy(p, e) for p, e in sorted(s))
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"><title>{name}</title></polyline>')
            out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" font-size="10" fill="{colour}">{name}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def emit_outputs(report: BenchmarkReport, out_dir, formats=("csv", "svg", "json")) -> dict[str, Path]:
    """Write ``report.csv``, ``report.svg`` and ``report.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for fmt in formats:
        path = out / f"report.{fmt}"
        if fmt == "csv":
            write_csv(report, path)
        elif fmt in ("svg", "svg-lineplot"):
            path = out / "report.svg"
            write_svg(report, path)
        elif fmt == "json":
            path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        else:
            raise ValueError(f"unknown output format {fmt!r}")
        written[fmt] = path
    return written
