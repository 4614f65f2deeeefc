"""Monte Carlo benchmark over synthetic scenes (mean and spread per metric)."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .core import AdmmConfig, ConfigError, RconmfError, SolverConfig
from .metrics import evaluate
from .order import DEFAULT_XI, estimate_order
from .solver import run_pao
from .synthgen import GeneratorConfig, SpectralLibrary, generate_scene

log = logging.getLogger(__name__)

METRICS = ("m_err", "s_err", "sad", "rre")
CSV_COLUMNS = ("p", "q", "metric", "mean", "std", "runs_ok", "runs_failed")


@dataclass(frozen=True)
class BenchSpec:
    """Sweep definition. ``q_rule`` is ``"equal-p"`` or an explicit integer order.

    With an explicit ``q`` the order is first estimated from row energies
    (threshold `xi`) and the scene is then re-solved with ``q = p_hat``; a
    wrong order estimate counts as a failed run.
    """

    p_values: tuple
    q_rule: Union[str, int] = "equal-p"
    snr_db: float = 30.0
    runs: int = 30
    n: int = 4000
    base_seed: int = 0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    lambda_prox: Optional[float] = None
    mu_prox: Optional[float] = None
    max_outer_iters: int = 2000
    outer_tol: float = 1e-6
    xi: float = DEFAULT_XI
    min_sad_deg: float = 10.0
    max_fraction: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "p_values", tuple(int(p) for p in self.p_values))
        if not self.p_values:
            raise ConfigError("p_values must be nonempty")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.q_rule != "equal-p":
            try:
                q = int(self.q_rule)
            except (TypeError, ValueError):
                raise ConfigError(f"q_rule must be 'equal-p' or an integer, got {self.q_rule!r}") from None
            if q < max(self.p_values):
                raise ConfigError("explicit q must be at least max(p_values)")
            object.__setattr__(self, "q_rule", q)
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must fit in 64 unsigned bits")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown bench fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "BenchSpec":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def order_for(self, p: int) -> int:
        return p if self.q_rule == "equal-p" else int(self.q_rule)


def run_seed(base_seed: int, p: int, r: int) -> int:
    """``base_seed XOR hash(p, r)``, stable across processes and platforms."""
    h = hashlib.blake2b(f"{p}:{r}".encode(), digest_size=8).digest()
    return base_seed ^ int.from_bytes(h, "little")


def solver_config(spec: BenchSpec, q: int, seed: int, known_order: bool) -> SolverConfig:
    # known order: tiny alpha keeps only the simplex constraint active
    alpha = spec.alpha if spec.alpha is not None else 1e-5
    beta = spec.beta if spec.beta is not None else 1e-1
    return SolverConfig(
        q=q,
        alpha=alpha,
        beta=beta,
        lambda_prox=spec.lambda_prox,
        mu_prox=spec.mu_prox,
        max_outer_iters=spec.max_outer_iters,
        outer_tol=spec.outer_tol,
        admm=AdmmConfig(),
        seed=seed % 2**64,
    )


def run_one(spec: BenchSpec, lib: SpectralLibrary, p: int, r: int) -> dict:
    """One Monte Carlo run; never raises for solver or data problems."""
    seed = run_seed(spec.base_seed, p, r)
    q = spec.order_for(p)
    try:
        scene = generate_scene(
            lib,
            GeneratorConfig(
                p=p, n=spec.n, snr_db=spec.snr_db, seed=seed,
                min_sad_deg=spec.min_sad_deg, max_fraction=spec.max_fraction,
            ),
        )
        if q == p:
            res = run_pao(scene.Y, None, solver_config(spec, q, seed, True))
        else:
            first = run_pao(scene.Y, None, solver_config(spec, q, seed, False))
            est = estimate_order(first.X_hat, spec.xi)
            if est.p_hat != p:
                return {"p": p, "q": q, "run": r, "ok": False, "error": f"estimated order {est.p_hat} != {p}"}
            res = run_pao(scene.Y, None, solver_config(spec, est.p_hat, seed, True))
        rep = evaluate(res.A_hat, res.X_hat, scene.M, scene.S, scene.Y)
    except RconmfError as exc:
        return {"p": p, "q": q, "run": r, "ok": False, "error": str(exc)}
    return {
        "p": p, "q": q, "run": r, "ok": True,
        "m_err": rep.m_err, "s_err": rep.s_err, "sad": rep.mean_sad_deg, "rre": rep.rre,
        "iterations": res.iterations, "converged": res.converged,
    }


def _run_task(args):
    return run_one(*args)


@dataclass
class BenchReport:
    spec: BenchSpec
    runs: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"{'q=p' if self.spec.q_rule == 'equal-p' else 'p (q=' + str(self.spec.q_rule) + ')':>10} "
                 + " ".join(f"{m:>20}" for m in METRICS)]
        for p in self.spec.p_values:
            cells = []
            for m in METRICS:
                row = next(r for r in self.rows if r["p"] == p and r["metric"] == m)
                if row["runs_ok"] == 0:
                    cells.append(f"{'-':>20}")
                else:
                    cells.append(f"{row['mean']:>10.4g} +- {row['std']:<7.2g}")
            lines.append(f"{p:>10} " + " ".join(cells))
        return "\n".join(lines) + "\n"

    def cell(self, p: int, metric: str) -> dict:
        return next(r for r in self.rows if r["p"] == p and r["metric"] == metric)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def run_bench(spec: BenchSpec, lib: SpectralLibrary, jobs: int = 1) -> BenchReport:
    """Run every (p, run) cell and summarize mean and sample standard deviation.

    Results depend only on ``(base_seed, p, run)``; `jobs` changes wall time only.
    """
    if max(spec.p_values) > lib.size:
        raise ConfigError(f"library has {lib.size} signatures, fewer than p={max(spec.p_values)}")
    tasks = [(spec, lib, p, r) for p in spec.p_values for r in range(spec.runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    for res in results:
        if not res["ok"]:
            log.warning("p=%d run %d failed: %s", res["p"], res["run"], res["error"])
    report = BenchReport(spec=spec, runs=results)
    for p in spec.p_values:
        cell = [r for r in results if r["p"] == p]
        good = [r for r in cell if r["ok"]]
        for m in METRICS:
            vals = np.array([r[m] for r in good])
            report.rows.append({
                "p": p,
                "q": spec.order_for(p),
                "metric": m,
                "mean": float(vals.mean()) if vals.size else float("nan"),
                "std": float(vals.std(ddof=1)) if vals.size > 1 else (0.0 if vals.size else float("nan")),
                "runs_ok": len(good),
                "runs_failed": len(cell) - len(good),
            })
    return report


def spec_dict(spec: BenchSpec) -> dict:
    return asdict(spec)
