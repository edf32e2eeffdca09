"""Diagonal weight pairs (R, C) for the weighted nuclear norm ``||R X C||_*``.

Schemes
-------
uniform
    Constant ``1/n`` on each side; equivalent to the unweighted problem.
true_sqrt
    Entrywise square roots of the true row/column marginals.
empirical_sqrt
    Entrywise square roots of the empirical marginals.
smoothed
    ``0.5 * sqrt(p_hat) + 1 / (2 n)``: half empirical, half uniform.
theorem3
    ``R_i = sqrt(p_hat_row_i * sum(p_hat_col[S_c]) / n)`` and the column
    analogue, where ``S_r``, ``S_c`` hold the ``floor(n / (mu0 r))``
    smallest empirical marginals.

Zero marginals are clamped up to ``1e-6 / n`` so that R and C stay
invertible; the smoothed scheme never needs the clamp.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .distributions import ProbabilityVector, ProductDistribution
from .sampling import EmpiricalEstimate

SCHEMES = ("uniform", "true_sqrt", "empirical_sqrt", "smoothed", "theorem3")
CLAMP_FACTOR = 1e-6


@dataclass(frozen=True)
class WeightPair:
    r: np.ndarray
    c: np.ndarray
    scheme: str = "custom"

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        c = np.array(self.c, dtype=float)
        for name, v in (("R", r), ("C", c)):
            if v.ndim != 1 or v.size == 0:
                raise ValueError(f"{name} weights must be a non-empty 1-d array")
            if not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise ValueError(f"{name} weights must be finite and strictly positive")
        r.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)

    @property
    def shape(self) -> tuple[int, int]:
        return self.r.size, self.c.size

    def scaled(self, t: float, s: float) -> "WeightPair":
        return WeightPair(t * self.r, s * self.c, self.scheme)

    @classmethod
    def identity(cls, n1: int, n2: int) -> "WeightPair":
        return cls(np.ones(n1), np.ones(n2), "identity")


@dataclass(frozen=True)
class SupportSets:
    s_r: np.ndarray
    s_c: np.ndarray

    @property
    def size(self) -> int:
        return self.s_r.size


def _marginals(source) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(source, EmpiricalEstimate):
        return source.row_hat, source.col_hat
    if isinstance(source, ProductDistribution):
        return source.row.weights, source.col.weights
    raise TypeError(f"expected EmpiricalEstimate or ProductDistribution, got {type(source).__name__}")


def _clamp(v: np.ndarray, warn: bool = False, label: str = "") -> np.ndarray:
    floor = CLAMP_FACTOR / v.size
    low = v < floor
    if warn and np.any(low):
        warnings.warn(f"{int(low.sum())} {label} weight(s) clamped to {floor:g}", RuntimeWarning, stacklevel=3)
    return np.maximum(v, floor)


def support_size(n: int, mu0: float, r: int) -> int:
    k = min(int(math.floor(n / (mu0 * r))), n)
    if k < 1:
        raise ValueError(f"floor(n / (mu0 r)) = floor({n} / ({mu0} * {r})) < 1; weights undefined")
    return k


def smallest_indices(v, k: int) -> np.ndarray:
    """Indices of the ``k`` smallest entries, ties to the lower index, ascending."""
    v = np.asarray(v.weights if isinstance(v, ProbabilityVector) else v, dtype=float)
    order = np.argsort(v, kind="stable")
    return np.sort(order[:k])


def support_sets(ref_row, ref_col, n: int, mu0: float, r: int) -> SupportSets:
    k = support_size(n, mu0, r)
    return SupportSets(smallest_indices(ref_row, k), smallest_indices(ref_col, k))


def weights_uniform(n1: int, n2: int | None = None) -> WeightPair:
    n2 = n1 if n2 is None else n2
    return WeightPair(np.full(n1, 1.0 / n1), np.full(n2, 1.0 / n2), "uniform")


def weights_true_sqrt(d: ProductDistribution) -> WeightPair:
    if not d.normalized:
        raise ValueError("true_sqrt weights expect normalised marginals")
    return WeightPair(
        _clamp(np.sqrt(d.row.weights), warn=True, label="row"),
        _clamp(np.sqrt(d.col.weights), warn=True, label="column"),
        "true_sqrt",
    )


def weights_empirical_sqrt(est) -> WeightPair:
    row, col = _marginals(est)
    return WeightPair(_clamp(np.sqrt(row)), _clamp(np.sqrt(col)), "empirical_sqrt")


def weights_smoothed(est) -> WeightPair:
    row, col = _marginals(est)
    return WeightPair(
        0.5 * np.sqrt(row) + 0.5 / row.size,
        0.5 * np.sqrt(col) + 0.5 / col.size,
        "smoothed",
    )


def weights_theorem3(est, mu0: float, r: int) -> tuple[WeightPair, SupportSets]:
    row, col = _marginals(est)
    if row.size != col.size:
        raise ValueError("theorem3 weights are defined for square matrices")
    n = row.size
    sets = support_sets(row, col, n, mu0, r)
    rw = np.sqrt(row * col[sets.s_c].sum() / n)
    cw = np.sqrt(col * row[sets.s_r].sum() / n)
    return WeightPair(_clamp(rw), _clamp(cw), "theorem3"), sets


def build_weights(scheme: str, shape: tuple[int, int], *, true=None, estimate=None,
                  mu0: float | None = None, rank: int | None = None) -> WeightPair:
    """Dispatch on ``scheme``; only the inputs that scheme needs are required."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown weight scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    if scheme == "uniform":
        return weights_uniform(*shape)
    if scheme == "true_sqrt":
        if true is None:
            raise ValueError("true_sqrt needs the true distribution")
        return weights_true_sqrt(true)
    if estimate is None:
        raise ValueError(f"{scheme} needs an empirical estimate")
    if scheme == "empirical_sqrt":
        return weights_empirical_sqrt(estimate)
    if scheme == "smoothed":
        return weights_smoothed(estimate)
    if mu0 is None or rank is None:
        raise ValueError("theorem3 needs mu0 and rank")
    return weights_theorem3(estimate, mu0, rank)[0]
