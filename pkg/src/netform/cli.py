"""Command-line entry point: ``netform <command> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .grouped import fit_grouped, select_group_counts
from .io import emit_report, groups_rows, load_dataset, render, write_dataset
from .likelihood import profile_rho
from .model import DatasetError
from .segmentation import bs_segment
from .simulation import ESTIMATORS, DgpConfig, generate_network, run_monte_carlo
from .step1 import FitOptions, fit_fixed_effects

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("NETFORM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"NETFORM_SEED must be an integer, got {env!r}") from None


def _options(args) -> FitOptions:
    return FitOptions(max_iterations=args.max_iter, gradient_tol=args.tol)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ext(fmt: str) -> str:
    return {"csv": "csv", "json": "json", "text": "txt"}[fmt]


def cmd_simulate(args) -> int:
    cfg = DgpConfig(n=args.n, r=args.r, selection_prob=args.selection_prob, seed=_seed(args))
    sim = generate_network(cfg, args.rep)
    out = _outdir(args)
    write_dataset(sim.dataset, out / "adjacency.csv", out / "covariates.csv")
    truth = {
        "n": cfg.n,
        "r": cfg.r,
        "seed": cfg.seed,
        "rep": args.rep,
        "selection_prob": cfg.selection_prob,
        "beta": list(cfg.beta0),
        "alpha": cfg.alpha0,
        "rho": cfg.rho0,
        "a_values": sim.groups.a_values.tolist(),
        "b_values": sim.groups.b_values.tolist(),
        "membership_a": sim.groups.membership_a.tolist(),
        "membership_b": sim.groups.membership_b.tolist(),
    }
    (out / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote n={cfg.n} network to {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = load_dataset(args.adjacency, args.covariates)
    options = _options(args)
    out = _outdir(args)
    ext = _ext(args.format)
    step1 = fit_fixed_effects(data, options)
    emit_report(step1, args.format, out / f"step1.{ext}")
    for agent, side in step1.separated:
        print(f"warning: {side} effect of agent {agent} hit the bound (separation)", file=sys.stderr)
    if args.skip_grouping:
        print(render(step1, "text") if args.format == "text" else f"step-1 estimates written to {out}")
        return EXIT_OK if step1.converged else EXIT_NONCONVERGED

    seg_a = bs_segment(step1.gamma_hat.a, args.ka, args.repartition_iters)
    seg_b = bs_segment(step1.gamma_hat.b, args.kb, args.repartition_iters)
    fit = fit_grouped(data, seg_a.memberships, seg_b.memberships, options, init=step1)
    emit_report(fit, args.format, out / f"estimates.{ext}")
    header, rows = groups_rows(fit, data.agent_labels)
    lines = [",".join(header)] + [",".join(str(c) for c in r) for r in rows]
    (out / "groups.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(render(fit, "text"), end="")
    print(f"loglik {fit.loglik_sum:.6f}")
    if fit.boundary:
        print(f"warning: {', '.join(fit.boundary)} ended on the parameter box (separation)", file=sys.stderr)
    if fit.singular:
        print("warning: information matrix is singular; standard errors omitted", file=sys.stderr)
    return EXIT_OK if (step1.converged and fit.converged) else EXIT_NONCONVERGED


def cmd_select_k(args) -> int:
    data = load_dataset(args.adjacency, args.covariates)
    grid = select_group_counts(
        data,
        range(2, args.ka_max + 1),
        range(2, args.kb_max + 1),
        _options(args),
        repartition_iters=args.repartition_iters,
        n_jobs=args.threads,
    )
    out = _outdir(args)
    emit_report(grid, args.format, out / f"bic.{_ext(args.format)}")
    print(render(grid, "text"), end="")
    ka, kb = grid.best
    print(f"selected k_a={ka}, k_b={kb}")
    return EXIT_OK


def cmd_profile_rho(args) -> int:
    if args.grid_points < 3:
        raise ValueError("--grid-points must be at least 3")
    data = load_dataset(args.adjacency, args.covariates)
    grid = np.linspace(args.grid_start, args.grid_stop, args.grid_points)
    prof = profile_rho(data, grid, _options(args))
    out = _outdir(args)
    emit_report(prof, args.format, out / f"profile.{_ext(args.format)}")
    print(render(prof, "text"), end="")
    print(f"argmax rho {prof.argmax:.4f}; unimodal on grid: {prof.unimodal}")
    return EXIT_OK if all(p.converged for p in prof.points) else EXIT_NONCONVERGED


def cmd_montecarlo(args) -> int:
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    cfg = DgpConfig(n=args.n, r=args.r, seed=_seed(args))
    summary = run_monte_carlo(cfg, args.reps, estimators, n_jobs=args.threads, options=_options(args))
    out = _outdir(args)
    emit_report(summary, args.format, out / f"montecarlo.{_ext(args.format)}")
    print(render(summary, "text"), end="")
    for m, (s, r) in sorted(summary.classification.items()):
        print(f"{m} classification: sender {s:.3f}, receiver {r:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netform", description="Network formation with grouped degree heterogeneity.")
    parser.add_argument("--threads", type=int, default=1, help="maximum worker processes")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $NETFORM_SEED, then 0)")
    parser.add_argument("--max-iter", type=int, default=200)
    parser.add_argument("--tol", type=float, default=1e-8)
    parser.add_argument("--format", choices=("csv", "json", "text"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)
    # --seed is also accepted after the subcommand; it wins over the global one when given there
    seed_here = argparse.ArgumentParser(add_help=False)
    seed_here.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    def data_args(p):
        p.add_argument("--adjacency", required=True)
        p.add_argument("--covariates", required=True)
        p.add_argument("--out", default="results")

    p = sub.add_parser("simulate", parents=[seed_here], help="draw a network from the grouped design")
    p.add_argument("--n", type=int, default=75)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--selection-prob", type=float, default=0.5)
    p.add_argument("--out", default="data")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[seed_here], help="step-1 fit, segmentation and grouped fit")
    data_args(p)
    p.add_argument("--ka", type=int, default=3)
    p.add_argument("--kb", type=int, default=3)
    p.add_argument("--repartition-iters", type=int, default=2)
    p.add_argument("--skip-grouping", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select-k", parents=[seed_here], help="BIC over a grid of group counts")
    data_args(p)
    p.add_argument("--ka-max", type=int, default=5)
    p.add_argument("--kb-max", type=int, default=5)
    p.add_argument("--repartition-iters", type=int, default=2)
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("profile-rho", parents=[seed_here], help="concentrated log-likelihood over a rho grid")
    data_args(p)
    p.add_argument("--grid-start", type=float, default=-0.95)
    p.add_argument("--grid-stop", type=float, default=0.95)
    p.add_argument("--grid-points", type=int, default=21)
    p.set_defaults(func=cmd_profile_rho)

    p = sub.add_parser("montecarlo", parents=[seed_here], help="bias/RMSE and classification over simulated replications")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--n", type=int, default=75)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--estimators", default=",".join(ESTIMATORS))
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
