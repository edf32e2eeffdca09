"""Command line entry point ``wmc``.

Distribution specs accepted by ``--dist``:

    uniform:N           uniform on N x N
    uniform:N1xN2       uniform on N1 x N2
    power:N:EXP         power law i**-EXP on both factors of N x N
    PATH                vector file, one factor per line (one line = square)

Indices everywhere are 0-based.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import bounds, conditions, experiments
from .distributions import ProductDistribution, load_product, load_vectors, power_law, uniform
from .sampling import EmpiricalEstimate, ObservationSet, stage_one_sample
from .solver import SolverConfig, solve_weighted
from .weights import SCHEMES, WeightPair, build_weights, support_sets

EXIT_CONFIG = 2


class ConfigError(Exception):
    pass


def parse_dist(spec: str) -> ProductDistribution:
    kind, _, rest = spec.partition(":")
    try:
        if kind == "uniform" and rest:
            if "x" in rest:
                n1, n2 = (int(t) for t in rest.split("x"))
            else:
                n1 = n2 = int(rest)
            return ProductDistribution(uniform(n1), uniform(n2))
        if kind == "power" and rest:
            n, exp = rest.split(":")
            v = power_law(int(n), float(exp))
            return ProductDistribution(v, v)
    except ValueError as exc:
        raise ConfigError(f"bad distribution spec {spec!r}: {exc}") from None
    return load_product(spec)


def _estimate(args, d: ProductDistribution) -> EmpiricalEstimate:
    if args.counts:
        vecs = load_vectors(args.counts)
        if len(vecs) != 2:
            raise ConfigError("--counts file needs two lines: row counts, column counts")
        rc, cc = (np.rint(v.weights).astype(np.int64) for v in vecs)
        return EmpiricalEstimate(rc, cc)
    if args.draws is None:
        raise ConfigError("need --draws M or --counts FILE for an empirical estimate")
    return stage_one_sample(bounds.normalized_target(d), args.draws, args.seed)


def _fmt_vec(v) -> str:
    return " ".join(repr(float(x)) for x in v)


def cmd_estimate(args) -> int:
    d = bounds.normalized_target(parse_dist(args.dist))
    plan = bounds.sample_size(d, args.alpha, args.epsilon, args.sided)
    print(f"m_required={plan.m_required}")
    if args.verify:
        cov = bounds.coverage(d, args.alpha, args.epsilon, args.sided, trials=args.verify, seed=args.seed)
        print(f"coverage={cov:.6f} trials={args.verify}")
    return 0


def cmd_weights(args) -> int:
    d = parse_dist(args.dist)
    est = None if args.scheme in ("uniform", "true_sqrt") else _estimate(args, d)
    true = bounds.normalized_target(d)
    w = build_weights(args.scheme, d.shape, true=true, estimate=est, mu0=args.mu0, rank=args.rank)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(f"# {w.scheme} weights: R then C\n{_fmt_vec(w.r)}\n{_fmt_vec(w.c)}\n")
    print(_fmt_vec(w.r))
    print(_fmt_vec(w.c))
    return 0


def _load_weights(path) -> WeightPair:
    vecs = load_vectors(path)
    if len(vecs) != 2:
        raise ConfigError(f"{path}: weight file needs two lines (R, then C)")
    return WeightPair(vecs[0].weights, vecs[1].weights, "file")


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"{args.condition} needs {' '.join(missing)}")


def cmd_check(args) -> int:
    d = parse_dist(args.dist)
    cond = args.condition
    if cond == "theorem1":
        _need(args, "multiplier", "weights", "mu0", "rank")
        rep = conditions.check_theorem1(d, args.multiplier, _load_weights(args.weights), args.mu0, args.rank, args.c0)
    elif cond == "theorem2":
        _need(args, "weights", "mu0", "rank", "alpha")
        est = _estimate(args, d)
        w = _load_weights(args.weights)
        sets = support_sets(est.row_hat, est.col_hat, est.shape[0], args.mu0, args.rank)
        sum_p = args.sum_p if args.sum_p is not None else d.total
        rep = conditions.check_theorem2(est, sum_p, w, sets, args.alpha, args.c0)
    elif cond in ("theorem3", "theorem3_relaxed"):
        _need(args, "mu0", "rank", "alpha")
        rep = conditions.check_theorem3_conditions(d, args.mu0, args.rank, args.alpha, args.c0,
                                                   relaxed=cond == "theorem3_relaxed")
    elif cond == "unweighted":
        _need(args, "mu0", "rank")
        rep = conditions.check_unweighted(d, args.mu0, args.rank, c0=args.c0)
    else:
        _need(args, "matrix", "multiplier")
        m = np.loadtxt(args.matrix, delimiter=",", ndmin=2)
        rep = conditions.check_leverage_condition(m, d, args.multiplier, args.c0)
    if args.header:
        print(conditions.CSV_HEADER)
    print(rep.csv_row())
    return 0


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        tol_feasibility=args.tol, max_iters=args.max_iters, mu_init=args.mu_init,
        rho=args.rho, penalty=args.penalty, balance=args.balance,
    )


def _parse_shape(text):
    if text is None:
        return None
    try:
        n1, n2 = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"--shape expects N1xN2, got {text!r}") from None
    return n1, n2


def cmd_solve(args) -> int:
    obs = ObservationSet.from_csv(args.observations, _parse_shape(args.shape))
    w = _load_weights(args.weights) if args.weights else WeightPair.identity(*obs.shape)
    res = solve_weighted(obs, w, _solver_config(args))
    np.savetxt(args.out, res.matrix, delimiter=",", fmt="%.17g")
    print(res.diagnostics())
    return 0


def cmd_phase(args) -> int:
    if args.config and args.preset:
        raise ConfigError("give --config or --preset, not both")
    if args.config:
        try:
            cfg = experiments.ExperimentConfig.from_json(args.config)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    else:
        cfg = experiments.preset(args.preset or "desk", args.seed)
    jobs = experiments.resolve_jobs(args.jobs)
    experiments.run_phase(cfg, args.out_dir, jobs=jobs, progress=None if args.quiet else sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wmc", description="Weighted nuclear norm matrix completion tools.")
    sub = p.add_subparsers(dest="command", required=True)

    def dist_args(sp, sample=False):
        sp.add_argument("--dist", required=True, help="distribution spec (see module help)")
        if sample:
            sp.add_argument("--draws", type=int, help="stage-one draws for the empirical estimate")
            sp.add_argument("--counts", help="file with row counts and column counts lines")
            sp.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("estimate", help="Hoeffding sample size for estimating the distribution")
    dist_args(e)
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--epsilon", type=float, required=True)
    e.add_argument("--sided", choices=("one_sided", "two_sided"), default="one_sided")
    e.add_argument("--verify", type=int, default=0, metavar="K", help="Monte Carlo coverage over K runs")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_estimate)

    w = sub.add_parser("weights", help="print R and C for a weight scheme")
    w.add_argument("--scheme", choices=SCHEMES, required=True)
    dist_args(w, sample=True)
    w.add_argument("--mu0", type=float)
    w.add_argument("--rank", type=int)
    w.add_argument("--out", help="also write the weights to a vector file")
    w.set_defaults(func=cmd_weights)

    c = sub.add_parser("check", help="evaluate a sufficient recovery condition")
    c.add_argument("condition", choices=conditions.CHECKS + ("theorem3_relaxed",))
    dist_args(c, sample=True)
    c.add_argument("--multiplier", type=float)
    c.add_argument("--weights", help="weight file (R line, C line)")
    c.add_argument("--mu0", type=float)
    c.add_argument("--rank", type=int)
    c.add_argument("--alpha", type=float)
    c.add_argument("--c0", type=float, default=1.0)
    c.add_argument("--sum-p", type=float, dest="sum_p")
    c.add_argument("--matrix", help="dense matrix CSV for the leverage condition")
    c.add_argument("--header", action="store_true")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("solve", help="complete a matrix from observed entries")
    s.add_argument("observations", help="CSV with header i,j,value")
    s.add_argument("--weights", help="weight file (R line, C line); omitted = unweighted")
    s.add_argument("--shape", help="N1xN2, if not implied by the observations")
    s.add_argument("--out", required=True, help="output CSV for the completed matrix")
    d = SolverConfig()
    s.add_argument("--tol", type=float, default=d.tol_feasibility)
    s.add_argument("--max-iters", type=int, default=d.max_iters)
    s.add_argument("--mu-init", type=float, default=d.mu_init)
    s.add_argument("--rho", type=float, default=d.rho)
    s.add_argument("--penalty", choices=("geometric", "balanced"), default=d.penalty)
    s.add_argument("--balance", type=float, default=d.balance)
    s.set_defaults(func=cmd_solve)

    ph = sub.add_parser("phase", help="run a phase-transition experiment")
    ph.add_argument("--config", help="JSON file mirroring ExperimentConfig fields")
    ph.add_argument("--preset", choices=sorted(experiments.PRESETS))
    ph.add_argument("--out-dir", default="phase_out")
    ph.add_argument("--jobs", type=int, help=f"worker processes (default ${experiments.JOBS_ENV} or 1)")
    ph.add_argument("--seed", type=int)
    ph.add_argument("--quiet", action="store_true")
    ph.set_defaults(func=cmd_phase)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, TypeError, OSError) as exc:
        print(f"wmc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
