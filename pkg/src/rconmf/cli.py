"""Command-line interface: ``rconmf {gen,unmix,order,eval,bench}``.

Exit codes: 0 success, 2 configuration error, 3 data or parse error,
4 solver did not converge (outputs are still written).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchSpec, run_bench
from .core import AdmmConfig, ConfigError, RconmfError, SolverConfig
from .io import read_matrix, save_matrix, save_matrix_csv, write_json
from .metrics import evaluate
from .order import DEFAULT_XI, estimate_order, reconstruction_curve
from .solver import run_pao
from .synthgen import GeneratorConfig, bundled_library, generate_scene, load_library

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NOCONV = 0, 2, 3, 4
LIBRARY_ENV = "RCNMF_LIBRARY_PATH"

log = logging.getLogger("rconmf")


def _library(path):
    path = path or os.environ.get(LIBRARY_ENV)
    return load_library(path) if path else bundled_library()


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _float(s: str) -> float:
    if s.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(s)


def _q_values(s: str) -> list:
    out = []
    for part in s.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _add_solver_flags(p: argparse.ArgumentParser, q_required=True):
    p.add_argument("--q", type=int, required=q_required, help="model order (overestimate of p)")
    p.add_argument("--alpha", type=float, default=1e-5, help="l2,1 weight")
    p.add_argument("--beta", type=float, default=1e-1, help="volume weight")
    p.add_argument("--lambda-prox", type=float, default=None)
    p.add_argument("--mu-prox", type=float, default=None)
    p.add_argument("--max-outer-iters", type=int, default=2000)
    p.add_argument("--outer-tol", type=float, default=1e-6)
    p.add_argument("--rho", type=float, default=None, help="ADMM penalty (default: automatic)")
    p.add_argument("--admm-max-iters", type=int, default=500)
    p.add_argument("--primal-tol", type=float, default=1e-6)
    p.add_argument("--dual-tol", type=float, default=1e-6)


def _solver_config(args, q=None) -> SolverConfig:
    return SolverConfig(
        q=args.q if q is None else q,
        alpha=args.alpha,
        beta=args.beta,
        lambda_prox=args.lambda_prox,
        mu_prox=args.mu_prox,
        max_outer_iters=args.max_outer_iters,
        outer_tol=args.outer_tol,
        admm=AdmmConfig(rho=args.rho, max_iters=args.admm_max_iters,
                        primal_tol=args.primal_tol, dual_tol=args.dual_tol),
        seed=args.seed,
    )


def _write_matrix(out: Path, name: str, M, csv: bool):
    save_matrix(out / f"{name}.bin", M)
    if csv:
        save_matrix_csv(out / f"{name}.csv", M)


def cmd_gen(args) -> int:
    lib = _library(args.library)
    cfg = GeneratorConfig(
        p=args.p, n=args.n, snr_db=args.snr_db, min_sad_deg=args.min_sad_deg,
        max_fraction=args.max_fraction, p_mix=args.p_mix, seed=args.seed,
    )
    scene = generate_scene(lib, cfg)
    out = _outdir(args)
    for name, M in (("Y", scene.Y), ("M", scene.M), ("S", scene.S)):
        _write_matrix(out, name, M, args.csv)
    man = scene.manifest()
    man.update(command="gen", version=__version__, library=str(args.library or os.environ.get(LIBRARY_ENV) or "bundled"))
    write_json(out / "manifest.json", man)
    return EXIT_OK


def _write_unmix(out, res, csv):
    _write_matrix(out, "A_hat", res.A_hat, csv)
    _write_matrix(out, "X_hat", res.X_hat, csv)
    with (out / "objective_trace.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,objective\n")
        for t, v in enumerate(res.objective_trace):
            fh.write(f"{t},{v!r}\n")


def cmd_unmix(args) -> int:
    Y = read_matrix(args.input)
    cfg = _solver_config(args)
    res = run_pao(Y, None, cfg)
    out = _outdir(args)
    _write_unmix(out, res, args.csv)
    write_json(out / "manifest.json", {
        "command": "unmix", "version": __version__, "input": str(args.input),
        "config": asdict(cfg), "iterations": res.iterations, "converged": res.converged,
        "admm_converged": res.admm_converged, "anchor_indices": res.anchor_indices,
    })
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_order(args) -> int:
    Y = read_matrix(args.input)
    cfg = _solver_config(args)
    res = run_pao(Y, None, cfg)
    est = estimate_order(res.X_hat, args.xi)
    out = _outdir(args)
    _write_unmix(out, res, args.csv)
    doc = {
        "command": "order", "version": __version__, "input": str(args.input), "config": asdict(cfg),
        "zeta": est.zeta, "xi": est.xi, "p_hat": est.p_hat, "active_rows": est.active_rows,
        "converged": res.converged,
    }
    if args.q_values:
        curve_cfg = _solver_config(args)
        curve = reconstruction_curve(Y, _q_values(args.q_values), curve_cfg)
        with (out / "rre_curve.csv").open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("q,rre,ok\n")
            for pt in curve:
                fh.write(f"{pt.q},{pt.rre!r},{int(pt.ok)}\n")
    write_json(out / "order.json", doc)
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_eval(args) -> int:
    M_hat, S_hat = read_matrix(args.m_hat), read_matrix(args.s_hat)
    M, S, Y = read_matrix(args.m), read_matrix(args.s), read_matrix(args.y)
    rep = evaluate(M_hat, S_hat, M, S, Y, cost=args.cost)
    out = _outdir(args)
    doc = rep.to_dict()
    write_json(out / "metrics.json", doc)
    with (out / "metrics.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("metric,value\n")
        for key in ("rre", "rre_squared", "mean_sad_deg", "m_err", "s_err"):
            fh.write(f"{key},{doc[key]!r}\n")
        for k, v in enumerate(doc["per_endmember_sad_deg"]):
            fh.write(f"sad_{k},{v!r}\n")
    save_matrix_csv(out / "abundance_diff.csv", S_hat[rep.permutation] - S)
    save_matrix_csv(out / "endmember_diff.csv", M_hat[:, rep.permutation] - M)
    if args.verbose:
        print(f"RRE {rep.rre:.6g} (squared-numerator variant {rep.rre_squared:.6g})")
        print(f"SAD {rep.mean_sad_deg:.4f} deg, |M_hat-M|_F {rep.m_err:.4f}, abundance RMSE {rep.s_err:.5f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = BenchSpec.from_json(args.spec)
    if args.seed is not None:
        spec = BenchSpec.from_dict({**asdict(spec), "base_seed": args.seed})
    lib = _library(args.library)
    report = run_bench(spec, lib, jobs=args.jobs)
    out = _outdir(args)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8", newline="\n")
    (out / "report.txt").write_text(report.to_table(), encoding="utf-8", newline="\n")
    write_json(out / "runs.json", {"spec": asdict(spec), "runs": report.runs, "version": __version__})
    sys.stdout.write(report.to_table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rconmf", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed_default=0):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--output-dir", default=".")
        p.add_argument("--csv", action="store_true", help="also write matrices as CSV")
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    g = sub.add_parser("gen", help="generate a synthetic scene")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=int, default=4000)
    g.add_argument("--snr-db", type=_float, default=30.0)
    g.add_argument("--min-sad-deg", type=float, default=10.0)
    g.add_argument("--max-fraction", type=float, default=0.8)
    g.add_argument("--p-mix", type=int, default=None)
    g.add_argument("--library", default=None)
    common(g)
    g.set_defaults(func=cmd_gen)

    u = sub.add_parser("unmix", help="run R-CoNMF on a scene")
    u.add_argument("--input", required=True, help="scene matrix Y (.bin container or .csv)")
    _add_solver_flags(u)
    common(u)
    u.set_defaults(func=cmd_unmix)

    o = sub.add_parser("order", help="estimate the number of endmembers")
    o.add_argument("--input", required=True)
    _add_solver_flags(o)
    o.add_argument("--xi", type=float, default=DEFAULT_XI)
    o.add_argument("--q-values", default=None, help="orders for the RRE curve, e.g. '2-15' or '4,6,8'")
    common(o)
    o.set_defaults(func=cmd_order)

    e = sub.add_parser("eval", help="score estimates against ground truth")
    e.add_argument("--m-hat", required=True)
    e.add_argument("--s-hat", required=True)
    e.add_argument("--m", required=True)
    e.add_argument("--s", required=True)
    e.add_argument("--y", required=True)
    e.add_argument("--cost", choices=("sad", "euclidean"), default="sad")
    common(e)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="Monte Carlo benchmark from a JSON spec")
    b.add_argument("--spec", required=True)
    b.add_argument("--library", default=None)
    b.add_argument("--jobs", type=int, default=1)
    common(b, seed_default=None)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"rconmf: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RconmfError, OSError, ValueError) as exc:
        print(f"rconmf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
