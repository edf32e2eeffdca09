"""Exact matrix completion by (weighted) nuclear norm minimisation.

The unweighted program ``min ||X||_* s.t. X_ij = M_ij on Omega`` is solved
with the inexact augmented Lagrangian method on the split

    min ||Z||_*  s.t.  Z + E = D,  P_Omega(E) = 0,

where ``D`` carries the observed values and zeros elsewhere. One outer
iteration is

    Z <- SVT_{1/mu}(D - E + Y/mu)
    E <- P_{Omega^c}(D - Z + Y/mu)
    Y <- Y + mu (D - Z - E)

followed by a penalty update. The weighted program ``min ||R X C||_*`` is
reduced to the unweighted one on ``R M C`` and mapped back with
``R^-1 Z C^-1``.

Two penalty schedules are offered. ``balanced`` (the default) adapts
``mu`` so the primal and dual residuals stay within a factor ``balance``
of each other and stops only when both are below tolerance, i.e. at a
KKT point of the convex program. ``geometric`` multiplies ``mu`` by
``rho`` every iteration and stops on primal feasibility alone; it needs
far fewer iterations on hard instances, but the finite total step
``sum 1/mu`` means it can stop at a feasible point short of the
minimiser, more often the larger ``rho`` is. The phase-transition
presets use it for throughput.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .linalg import frobenius, nuclear_norm, shrink, svd
from .sampling import ObservationSet
from .weights import WeightPair


@dataclass(frozen=True)
class SolverConfig:
    tol_feasibility: float = 1e-7
    max_iters: int = 5000
    mu_init: float = 1.0
    rho: float = 1.1
    recovery_tol: float = 1e-5
    penalty: Literal["geometric", "balanced"] = "balanced"
    balance: float = 10.0
    record_objective: bool = False

    def __post_init__(self):
        if not self.rho > 1:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if not (self.tol_feasibility > 0 and self.recovery_tol > 0 and self.mu_init > 0):
            raise ValueError("tolerances and mu_init must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.penalty not in ("geometric", "balanced"):
            raise ValueError(f"unknown penalty schedule {self.penalty!r}")
        if not self.balance > 1:
            raise ValueError("balance must exceed 1")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class SolveResult:
    matrix: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    stop_reason: str = ""
    objective: list = field(default_factory=list)

    def diagnostics(self) -> str:
        return f"{str(self.converged).lower()},{self.iterations},{self.final_residual:.6e}"


def _ialm(d: np.ndarray, mask: np.ndarray, cfg: SolverConfig) -> SolveResult:
    norm_d = frobenius(d)
    if norm_d == 0.0:
        return SolveResult(np.zeros_like(d), 0, 0.0, True, "zero data")
    if mask.all():
        # constraints pin every entry
        return SolveResult(d.copy(), 0, 0.0, True, "fully observed")
    unobserved = ~mask
    sigma1 = svd(d).s[0]
    mu = cfg.mu_init / sigma1
    tol = cfg.tol_feasibility
    y = np.zeros_like(d)
    e = np.zeros_like(d)
    z = np.zeros_like(d)
    objective = []
    residual = np.inf
    reason = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        dec = svd(d - e + y / mu)
        s = shrink(dec.s, 1.0 / mu)
        k = int(np.count_nonzero(s))
        z_new = (dec.u[:, :k] * s[:k]) @ dec.vt[:k]
        e_new = np.where(unobserved, d - z_new + y / mu, 0.0)
        gap = d - z_new - e_new
        y = y + mu * gap
        residual = frobenius(gap) / norm_d
        dual = frobenius(e_new - e) / norm_d
        change = frobenius(z_new - z) / max(frobenius(z_new), np.finfo(float).tiny)
        e, z = e_new, z_new
        if cfg.record_objective:
            # on the scaled problem this is ||R X_k C||_* of the filled iterate
            objective.append(nuclear_norm(np.where(mask, d, z)))
        if cfg.penalty == "geometric":
            if residual <= tol:
                reason = "feasible"
                break
            if k > 0 and it > 5 and change < 0.1 * tol:
                reason = "stalled"
                break
            mu *= cfg.rho
        else:
            if residual <= tol and dual <= tol:
                reason = "kkt"
                break
            if residual > cfg.balance * dual:
                mu *= cfg.rho
            elif dual > cfg.balance * residual:
                mu /= cfg.rho
    filled = np.where(mask, d, z)
    return SolveResult(filled, it, float(residual), bool(residual <= tol), reason, objective)


def solve_unweighted(obs: ObservationSet, cfg: SolverConfig | None = None) -> SolveResult:
    """Minimum nuclear norm completion of ``obs``.

    The returned matrix equals the observations on ``Omega`` and the
    low-rank iterate elsewhere.
    """
    cfg = SolverConfig() if cfg is None else cfg
    if len(obs) == 0:
        raise ValueError("cannot complete a matrix from zero observations")
    return _ialm(obs.dense(), obs.mask(), cfg)


def scale_observations(obs: ObservationSet, w: WeightPair) -> ObservationSet:
    """Observations of ``R M C``: value ``R_i M_ij C_j`` at each observed pair."""
    if w.shape != obs.shape:
        raise ValueError(f"weights shape {w.shape} does not match observations {obs.shape}")
    vals = w.r[obs.rows] * obs.values * w.c[obs.cols]
    return ObservationSet(obs.shape, obs.rows, obs.cols, vals)


def unscale(z: np.ndarray, w: WeightPair) -> np.ndarray:
    return z / w.r[:, None] / w.c[None, :]


def solve_weighted(obs: ObservationSet, w: WeightPair, cfg: SolverConfig | None = None) -> SolveResult:
    """Minimise ``||R X C||_*`` subject to agreeing with ``obs``.

    Solved as the unweighted problem on the rescaled observations
    ``R_i M_ij C_j`` and mapped back entrywise. The rescaling is an
    invertible linear change of variables, so the two programs share
    their minimiser.
    """
    cfg = SolverConfig() if cfg is None else cfg
    if np.any(w.r <= 0) or np.any(w.c <= 0):
        raise ValueError("weights must be strictly positive")
    scaled = scale_observations(obs, w)
    if len(scaled) == 0:
        raise ValueError("cannot complete a matrix from zero observations")
    res = _ialm(scaled.dense(), scaled.mask(), cfg)
    res.matrix = unscale(res.matrix, w)
    return res


def recovery_error(m, result: SolveResult) -> float:
    m = np.asarray(m, dtype=float)
    if m.shape != result.matrix.shape:
        raise ValueError(f"shape mismatch: {m.shape} vs {result.matrix.shape}")
    return frobenius(m - result.matrix)


def recovery_check(m, result: SolveResult, tol: float = 1e-5) -> bool:
    """Exact recovery: ``||M - M_bar||_F <= tol``."""
    return recovery_error(m, result) <= tol
