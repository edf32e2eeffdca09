"""Sufficient conditions for exact recovery, evaluated as slack reports.

Each checker returns a :class:`ConditionReport` whose ``margin`` is the
smallest ``lhs - rhs`` over all indices, so a non-negative margin means the
condition holds. ``c0`` is the unspecified universal constant of the
recovery theorems; it defaults to 1 and the reports are diagnostics only.
All checkers are for square ``n x n`` problems and use ``log(2n) ** 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ProductDistribution
from .linalg import leverage_scores
from .sampling import EmpiricalEstimate
from .weights import SupportSets, WeightPair, smallest_indices, support_size


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    satisfied: bool
    margin: float
    worst_index: tuple
    relative_margin: float = float("nan")

    def csv_row(self) -> str:
        wi, wj = (list(self.worst_index) + ["", ""])[:2]
        return f"{self.condition},{str(self.satisfied).lower()},{self.margin!r},{wi},{wj}"


CSV_HEADER = "condition,satisfied,margin,worst_i,worst_j"


def _log2n(n: int) -> float:
    return math.log(2 * n) ** 2


def _square(n1: int, n2: int, what: str) -> int:
    if n1 != n2:
        raise ValueError(f"{what} is stated for square matrices, got {n1}x{n2}")
    return n1


def _report(name: str, lhs: np.ndarray, rhs, extra=()) -> ConditionReport:
    """Minimum slack over ``lhs - rhs`` plus optional ``(slack, index)`` extras."""
    slack = lhs - rhs
    flat = int(np.argmin(slack))
    idx = tuple(int(k) for k in np.unravel_index(flat, slack.shape))
    margin = float(slack.flat[flat])
    rhs = np.broadcast_to(rhs, slack.shape)
    pos = rhs > 0
    rel = float(np.min(slack[pos] / rhs[pos])) if np.any(pos) else float("inf")
    for s, i in extra:
        if s < margin:
            margin, idx = float(s), i
    return ConditionReport(name, margin >= 0, margin, idx, rel)


def _weight_ratio(w: WeightPair, s_r, s_c) -> np.ndarray:
    r2, c2 = w.r ** 2, w.c ** 2
    return r2[:, None] / r2[s_r].sum() + c2[None, :] / c2[s_c].sum()


def check_theorem1(d_rates: ProductDistribution, multiplier: float, w: WeightPair,
                   mu0: float, r: int, c0: float = 1.0) -> ConditionReport:
    """``p_ij >= c0 (R_i^2 / sum_S R^2 + C_j^2 / sum_S C^2) log^2(2n)`` and ``p_ij >= n^-10``.

    The sums run over the ``floor(n / (mu0 r))`` smallest weights, i.e. the
    first indices after sorting ascending; the left side keeps the original order.
    """
    n = _square(*d_rates.shape, "theorem 1")
    p = np.minimum(1.0, multiplier * d_rates.matrix())
    k = support_size(n, mu0, r)
    rhs = c0 * _weight_ratio(w, smallest_indices(w.r, k), smallest_indices(w.c, k)) * _log2n(n)
    floor_slack = p - float(n) ** -10
    fi = int(np.argmin(floor_slack))
    extra = [(floor_slack.flat[fi], tuple(int(v) for v in np.unravel_index(fi, p.shape)))]
    return _report("theorem1", p, rhs, extra)


def check_theorem2(est: EmpiricalEstimate, sum_p: float, w: WeightPair, sets: SupportSets,
                   alpha: float, c0: float = 1.0) -> ConditionReport:
    """``p_hat_ij >= (1 + alpha)^2 / sum(p) * c0 * (weight ratio) * log^2(2n)``."""
    n = _square(*est.shape, "theorem 2")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not sum_p > 0:
        raise ValueError(f"sum_p must be positive, got {sum_p}")
    rhs = (1 + alpha) ** 2 / sum_p * c0 * _weight_ratio(w, sets.s_r, sets.s_c) * _log2n(n)
    return _report("theorem2", est.matrix(), rhs)


def theorem3_threshold(n: int, alpha: float, c0: float = 1.0) -> float:
    return c0 * 2 * (1 + alpha) ** 2 / (1 - alpha) ** 2 * _log2n(n)


def check_theorem3_conditions(d: ProductDistribution, mu0: float, r: int, alpha: float,
                              c0: float = 1.0, relaxed: bool = False) -> ConditionReport:
    """Both families ``col_j * sum(row[S*_r]) >= T`` and ``row_i * sum(col[S*_c]) >= T``.

    ``d`` holds the unnormalised rate factors; ``S*`` are the
    ``floor(n / (mu0 r))`` smallest true marginals. The threshold is
    ``T = c0 * 2 (1 + alpha)^2 / (1 - alpha)^2 * log^2(2n)``; with
    ``relaxed=True`` the alpha-dependent factor is dropped (``T = c0 log^2(2n)``),
    the order-of-magnitude form that is compared against the unweighted
    condition. The worst index is ``(i, "")`` for the row family and
    ``("", j)`` for columns.
    """
    n = _square(*d.shape, "theorem 3")
    if not 0 < alpha < 1:
        raise ValueError(f"theorem 3 needs alpha in (0, 1), got {alpha}")
    row, col = d.row.weights, d.col.weights
    k = support_size(n, mu0, r)
    t = c0 * _log2n(n) if relaxed else theorem3_threshold(n, alpha, c0)
    col_lhs = col * row[smallest_indices(row, k)].sum()
    row_lhs = row * col[smallest_indices(col, k)].sum()
    j = int(np.argmin(col_lhs))
    i = int(np.argmin(row_lhs))
    if col_lhs[j] - t < row_lhs[i] - t:
        margin, idx, lhs = col_lhs[j] - t, ("", j), col_lhs[j]
    else:
        margin, idx, lhs = row_lhs[i] - t, (i, ""), row_lhs[i]
    name = "theorem3_relaxed" if relaxed else "theorem3"
    return ConditionReport(name, bool(margin >= 0), float(margin), idx, float(lhs / t - 1))


def unweighted_threshold(n: int, mu0: float, r: int, c0: float = 1.0) -> float:
    return c0 * mu0 * r / n * _log2n(n)


def check_unweighted(d: ProductDistribution, mu0: float, r: int, n: int | None = None,
                     c0: float = 1.0) -> ConditionReport:
    """``row_i col_j >= c0 (mu0 r / n) log^2(2n)`` for every pair."""
    n_d = _square(*d.shape, "the unweighted condition")
    n = n_d if n is None else n
    rhs = np.full(d.shape, unweighted_threshold(n, mu0, r, c0))
    return _report("unweighted", d.matrix(), rhs)


def check_leverage_condition(m, d_rates: ProductDistribution, multiplier: float,
                             c0: float = 1.0) -> ConditionReport:
    """``min(1, q p_ij) >= min(c0 (mu_i + nu_j) r log^2(2n) / n, 1)``."""
    m = np.asarray(m, dtype=float)
    n = _square(*m.shape, "the leverage-score condition")
    if d_rates.shape != m.shape:
        raise ValueError(f"rates shape {d_rates.shape} does not match matrix {m.shape}")
    lev = leverage_scores(m)
    p = np.minimum(1.0, multiplier * d_rates.matrix())
    rhs = np.minimum(c0 * (lev.row[:, None] + lev.col[None, :]) * lev.rank * _log2n(n) / n, 1.0)
    return _report("leverage", p, rhs)


CHECKS = ("theorem1", "theorem2", "theorem3", "unweighted", "leverage")
