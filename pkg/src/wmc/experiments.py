"""Phase-transition experiments over rank x sampling rate x weight scheme.

A work item is one ``(rank, rate, trial)`` cell instance. Every scheme in
the config is solved on the same planted matrix and the same observed
set, so scheme comparisons share their randomness. Item seeds come from
``stream(seed, rank, trial, k)`` and do not depend on the rate, which
makes the observation sets nested across rates as well: the draws for a
smaller rate are a prefix of the draws for a larger one (with
replacement), or a subset of the same uniform field (two stage).

Rate axis
---------
with_replacement
    ``rate = m / n**2``; ``m = round(rate * n**2)`` pairs are drawn from
    the true product distribution, the observed set is the distinct pairs,
    and the empirical marginals come from the same draws.
two_stage
    ``rate`` is the Bernoulli multiplier ``q``: entry ``(i, j)`` is revealed
    with probability ``min(1, q p_ij)``. Stage one draws ``stage_one_m``
    pairs independently for the empirical marginals.
"""
from __future__ import annotations

import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .distributions import ProductDistribution, power_law
from .linalg import frobenius, leverage_scores, random_low_rank
from .sampling import (EmpiricalEstimate, ObservationSet, bernoulli_probabilities, draw_pairs,
                       expected_unique_fraction, stage_one_sample, stream, unique_fraction_curve)
from .solver import SolverConfig, recovery_error, solve_weighted
from .weights import SCHEMES, build_weights

MODES = ("with_replacement", "two_stage")
GRID_HEADER = "rank,rate,scheme,trials,successes,probability,mean_residual,mean_iters"
JOBS_ENV = "WMC_JOBS"

# grids run thousands of solves; the geometric schedule keeps them affordable
GRID_SOLVER = SolverConfig(penalty="geometric", max_iters=1000)

# stream key slots under (seed, rank, trial)
_K_MATRIX, _K_DRAWS, _K_STAGE_ONE = 0, 1, 2


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 100
    ranks: tuple = (3, 5, 8)
    rates: tuple = (0.0, 1.5, 2.5, 4.0, 6.0, 10.0)
    schemes: tuple = ("uniform", "true_sqrt", "empirical_sqrt", "smoothed")
    trials: int = 50
    exponent: float = 1.2
    mode: str = "with_replacement"
    seed: int = 0
    solver: SolverConfig = GRID_SOLVER
    stage_one_m: int | None = None
    unique_seeds: int = 20

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        object.__setattr__(self, "rates", tuple(float(q) for q in self.rates))
        object.__setattr__(self, "schemes", tuple(str(s) for s in self.schemes))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.ranks:
            raise ValueError("ranks must be nonempty")
        if any(not 1 <= r <= self.n for r in self.ranks):
            raise ValueError(f"ranks must lie in [1, {self.n}]")
        if not self.rates:
            raise ValueError("rates must be nonempty")
        if any(b <= a for a, b in zip(self.rates, self.rates[1:])):
            raise ValueError("rates must be sorted strictly ascending")
        if any(q < 0 or not math.isfinite(q) for q in self.rates):
            raise ValueError("rates must be finite and >= 0")
        if not self.schemes:
            raise ValueError("schemes must be nonempty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown scheme(s) {bad}; choose from {', '.join(SCHEMES)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError("duplicate schemes")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.exponent > 0:
            raise ValueError("exponent must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.stage_one_m is not None and self.stage_one_m < 1:
            raise ValueError("stage_one_m must be >= 1")
        if not isinstance(self.solver, SolverConfig):
            raise TypeError("solver must be a SolverConfig")

    def distribution(self) -> ProductDistribution:
        v = power_law(self.n, self.exponent)
        return ProductDistribution(v, v)

    def draws_for(self, rate: float) -> int:
        return int(round(rate * self.n * self.n))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ranks"] = list(self.ranks)
        out["rates"] = list(self.rates)
        out["schemes"] = list(self.schemes)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(extra))}")
        solver = raw.pop("solver", None) or {}
        if isinstance(solver, dict):
            sknown = {f.name for f in fields(SolverConfig)}
            sextra = set(solver) - sknown
            if sextra:
                raise ValueError(f"unknown solver field(s): {', '.join(sorted(sextra))}")
            solver = replace(GRID_SOLVER, **solver)
        return cls(solver=solver, **raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw)


PRESETS = {
    # rates in m / n**2; weighted schemes cross over near 2-3, uniform near 6-8 at rank 5
    "desk": ExperimentConfig(),
    # long-running manual job, never run in CI
    "paper": ExperimentConfig(
        n=500,
        ranks=(5, 10, 15, 20, 25),
        rates=(0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0),
        trials=100,
    ),
}


def preset(name: str, seed: int | None = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    cfg = PRESETS[name]
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return cfg


@dataclass(frozen=True)
class TrialOutcome:
    recovered: bool
    residual: float
    iterations: int
    error: str = ""


@dataclass
class Cell:
    successes: int = 0
    trials: int = 0
    residual_sum: float = 0.0
    iters_sum: float = 0.0

    @property
    def probability(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def mean_residual(self) -> float:
        return self.residual_sum / self.trials if self.trials else float("nan")

    @property
    def mean_iters(self) -> float:
        return self.iters_sum / self.trials if self.trials else float("nan")

    def add(self, o: TrialOutcome) -> None:
        self.trials += 1
        self.successes += int(o.recovered)
        self.residual_sum += o.residual
        self.iters_sum += o.iterations


@dataclass
class PhaseGrid:
    """Cells keyed by ``(rank, rate, scheme)``."""

    cells: dict = field(default_factory=dict)

    def cell(self, rank: int, rate: float, scheme: str) -> Cell:
        return self.cells.setdefault((int(rank), float(rate), scheme), Cell())

    def keys(self) -> list:
        return sorted(self.cells)

    def probability(self, rank, rate, scheme) -> float:
        return self.cells[(int(rank), float(rate), scheme)].probability

    def curve(self, rank: int, scheme: str) -> list[tuple[float, float]]:
        return [(q, self.cells[(r, q, s)].probability) for r, q, s in self.keys() if r == rank and s == scheme]

    def __len__(self):
        return len(self.cells)


def _instance(cfg: ExperimentConfig, rank: int, rate: float, trial: int):
    """Planted matrix, observations and empirical estimate for one item."""
    n = cfg.n
    d = cfg.distribution()
    m_true = random_low_rank(n, rank, stream(cfg.seed, rank, trial, _K_MATRIX))
    if cfg.mode == "with_replacement":
        m = cfg.draws_for(rate)
        if m == 0:
            return m_true, d, ObservationSet((n, n), [], [], []), None
        rows, cols = draw_pairs(d, m, stream(cfg.seed, rank, trial, _K_DRAWS))
        obs = ObservationSet.from_pairs(m_true, rows, cols)
        est = EmpiricalEstimate.from_pairs(rows, cols, d.shape)
        return m_true, d, obs, est
    # two stage: one uniform field per item, thresholded at each rate
    u = stream(cfg.seed, rank, trial, _K_DRAWS).random((n, n))
    mask = u < (bernoulli_probabilities(d, rate) if rate > 0 else 0.0)
    obs = ObservationSet.from_mask(m_true, mask)
    m1 = cfg.stage_one_m if cfg.stage_one_m is not None else n * n
    est = stage_one_sample(d, m1, stream(cfg.seed, rank, trial, _K_STAGE_ONE))
    return m_true, d, obs, est


def _failed(m_true, err: Exception) -> TrialOutcome:
    # no completion: score the zero matrix
    return TrialOutcome(False, frobenius(m_true), 0, f"{type(err).__name__}: {err}")


def run_item(cfg: ExperimentConfig, rank: int, rate: float, trial: int) -> dict:
    """All schemes on one shared instance; ``{scheme: TrialOutcome}``."""
    m_true, d, obs, est = _instance(cfg, rank, rate, trial)
    mu0 = None
    out = {}
    for scheme in cfg.schemes:
        try:
            if len(obs) == 0:
                raise ValueError("no observed entries")
            if scheme == "theorem3" and mu0 is None:
                mu0 = leverage_scores(m_true).coherence
            w = build_weights(scheme, d.shape, true=d, estimate=est, mu0=mu0, rank=rank)
            res = solve_weighted(obs, w, cfg.solver)
            err = recovery_error(m_true, res)
            out[scheme] = TrialOutcome(bool(err <= cfg.solver.recovery_tol), err, res.iterations)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out[scheme] = _failed(m_true, exc)
    return out


def run_trial(cfg: ExperimentConfig, rank: int, rate: float, scheme: str, trial: int):
    """``(recovered, TrialOutcome)`` for a single scheme."""
    if scheme not in cfg.schemes:
        cfg = replace(cfg, schemes=(scheme,))
    o = run_item(cfg, rank, rate, trial)[scheme]
    return o.recovered, o


def _work(args):
    cfg, rank, rate, trial = args
    return (rank, rate, trial), run_item(cfg, rank, rate, trial)


def resolve_jobs(jobs: int | None = None) -> int:
    """Explicit ``jobs`` wins, then ``$WMC_JOBS``, then 1."""
    if jobs is None:
        env = os.environ.get(JOBS_ENV, "").strip()
        if env:
            try:
                jobs = int(env)
            except ValueError:
                raise ValueError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
        else:
            jobs = 1
    if jobs < 1:
        raise ValueError(f"job count must be >= 1, got {jobs}")
    return jobs


def run_grid(cfg: ExperimentConfig, jobs: int | None = None, progress=None) -> PhaseGrid:
    """Execute every ``(rank, rate, trial)`` item and aggregate per scheme.

    Results are gathered by key and folded in sorted order, so the grid is
    the same for any job count or completion order. ``progress`` is an
    optional text stream for one status line per finished item.
    """
    jobs = resolve_jobs(jobs)
    items = [(cfg, r, q, t) for r in cfg.ranks for q in cfg.rates for t in range(cfg.trials)]
    results = {}
    if jobs == 1:
        it = map(_work, items)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        it = pool.map(_work, items, chunksize=max(1, len(items) // (8 * jobs)))
    try:
        for done, (key, outcomes) in enumerate(it, 1):
            results[key] = outcomes
            if progress is not None:
                progress.write(f"\r{done}/{len(items)} items")
                progress.flush()
    finally:
        if pool is not None:
            pool.shutdown()
    if progress is not None:
        progress.write("\n")
    grid = PhaseGrid()
    for key in sorted(results):
        rank, rate, _ = key
        for scheme in cfg.schemes:
            grid.cell(rank, rate, scheme).add(results[key][scheme])
    return grid


def _fmt_rate(q: float) -> str:
    return format(q, ".10g")


def emit_csv(grid: PhaseGrid, path) -> Path:
    if len(grid) == 0:
        raise ValueError("refusing to write an empty grid")
    path = Path(path)
    lines = [GRID_HEADER]
    for rank, rate, scheme in grid.keys():
        c = grid.cells[(rank, rate, scheme)]
        lines.append(
            f"{rank},{_fmt_rate(rate)},{scheme},{c.trials},{c.successes},"
            f"{c.probability:.6f},{c.mean_residual:.6e},{c.mean_iters:.2f}"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> list[dict]:
    """Parse a grid file back into typed rows."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if ",".join(reader.fieldnames or []) != GRID_HEADER:
            raise ValueError(f"{path}: unexpected header")
        rows = []
        for rec in reader:
            rows.append({
                "rank": int(rec["rank"]),
                "rate": float(rec["rate"]),
                "scheme": rec["scheme"],
                "trials": int(rec["trials"]),
                "successes": int(rec["successes"]),
                "probability": float(rec["probability"]),
                "mean_residual": float(rec["mean_residual"]),
                "mean_iters": float(rec["mean_iters"]),
            })
    return rows


def emit_plot_data(grid: PhaseGrid, out_dir, unique_curve=None) -> list[Path]:
    """``series_r<rank>_<scheme>.dat`` files of ``rate probability`` rows.

    ``unique_curve`` is a list of ``(m, fraction)`` or ``(m, fraction, expected)``
    tuples written to ``unique_fraction.dat`` when given.
    """
    if len(grid) == 0:
        raise ValueError("refusing to write an empty grid")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rank, scheme in sorted({(r, s) for r, _, s in grid.keys()}):
        p = out_dir / f"series_r{rank}_{scheme}.dat"
        body = "".join(f"{_fmt_rate(q)} {prob:.6f}\n" for q, prob in grid.curve(rank, scheme))
        p.write_text("# rate probability\n" + body)
        written.append(p)
    if unique_curve is not None:
        p = out_dir / "unique_fraction.dat"
        ncol = len(unique_curve[0]) if unique_curve else 2
        head = "# m fraction expected\n" if ncol == 3 else "# m fraction\n"
        p.write_text(head + "".join(" ".join(_fmt_rate(v) for v in row) + "\n" for row in unique_curve))
        written.append(p)
    return written


def unique_fraction_data(cfg: ExperimentConfig) -> list[tuple[int, float, float]]:
    """Monte Carlo and analytic distinct-entry fractions at the config's draw counts."""
    d = cfg.distribution()
    grid = sorted({cfg.draws_for(q) for q in cfg.rates})
    seeds = [stream(cfg.seed, 2**31 - 1, s) for s in range(cfg.unique_seeds)]
    mc = unique_fraction_curve(d, grid, seeds=seeds)
    return [(m, f, expected_unique_fraction(d, m)) for m, f in mc]


def _version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def write_meta(cfg: ExperimentConfig, path, jobs: int) -> Path:
    meta = {
        "version": _version(),
        "config": cfg.to_dict(),
        "rate_axis": "m / n^2 draws per entry" if cfg.mode == "with_replacement" else "Bernoulli multiplier q",
        "jobs": jobs,
    }
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def run_phase(cfg: ExperimentConfig, out_dir, jobs: int | None = None, progress=sys.stderr) -> PhaseGrid:
    """Full experiment: grid, series files, unique-fraction curve, run metadata."""
    jobs = resolve_jobs(jobs)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = run_grid(cfg, jobs=jobs, progress=progress)
    emit_csv(grid, out_dir / "grid.csv")
    curve = unique_fraction_data(cfg) if cfg.mode == "with_replacement" else None
    emit_plot_data(grid, out_dir, curve)
    write_meta(cfg, out_dir / "run_meta", jobs)
    return grid
