"""Hoeffding sample sizes for estimating a product distribution.

With ``q = alpha * min(min(row), min(col))`` the one-sided plan takes
``m = ceil(log((n1 + n2) / eps) / (2 q**2))`` draws and guarantees, with
probability at least ``1 - eps``, that ``p_ij >= p_hat_ij / (1 + alpha)**2``
for every pair. The two-sided plan replaces ``n1 + n2`` by ``2 (n1 + n2)``
and adds the upper bound ``p_ij <= p_hat_ij / (1 - alpha)**2``.

Logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .distributions import ProductDistribution, alpha_max, normalize_product
from .sampling import EmpiricalEstimate, stage_one_sample, stream

Sided = Literal["one_sided", "two_sided"]


@dataclass(frozen=True)
class BoundPlan:
    alpha: float
    epsilon: float
    m_required: int
    sided: Sided
    shape: tuple[int, int]
    min_probability: float

    @property
    def m_exact(self) -> float:
        """The closed form before rounding up."""
        return _closed_form(self.alpha, self.min_probability, self.epsilon, self.shape, self.sided)


def _closed_form(alpha, min_prob, epsilon, shape, sided) -> float:
    n1, n2 = shape
    mult = 1.0 if sided == "one_sided" else 2.0
    return 0.5 * (alpha * min_prob) ** -2 * math.log(mult * (n1 + n2) / epsilon)


def _validate(d: ProductDistribution, alpha: float, epsilon: float) -> None:
    if not d.normalized:
        raise ValueError("sample sizes are defined for a normalised distribution; "
                         "see normalized_target()")
    hi = alpha_max(d)
    if not 0 < alpha < hi:
        raise ValueError(f"alpha={alpha} outside the admissible interval (0, {hi})")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon={epsilon} outside (0, 1)")


def _plan(d, alpha, epsilon, sided) -> BoundPlan:
    _validate(d, alpha, epsilon)
    min_prob = float(min(d.row.weights.min(), d.col.weights.min()))
    m = math.ceil(_closed_form(alpha, min_prob, epsilon, d.shape, sided))
    return BoundPlan(float(alpha), float(epsilon), int(m), sided, d.shape, min_prob)


def sample_size_one_sided(d: ProductDistribution, alpha: float, epsilon: float) -> BoundPlan:
    return _plan(d, alpha, epsilon, "one_sided")


def sample_size_two_sided(d: ProductDistribution, alpha: float, epsilon: float) -> BoundPlan:
    return _plan(d, alpha, epsilon, "two_sided")


def sample_size(d: ProductDistribution, alpha: float, epsilon: float, sided: Sided = "one_sided") -> BoundPlan:
    if sided not in ("one_sided", "two_sided"):
        raise ValueError(f"unknown sidedness {sided!r}")
    return _plan(d, alpha, epsilon, sided)


def normalized_target(rates: ProductDistribution) -> ProductDistribution:
    """The distribution stage one actually estimates: ``p / sum(p)``.

    Bernoulli rate matrices need not sum to one; normalising each factor
    gives a product equal to ``p / sum(p)`` and keeps the ratios
    ``row_i / sum(row)`` that the recovery conditions are stated in.
    """
    return normalize_product(rates)


def _pairwise(d: ProductDistribution, est: EmpiricalEstimate):
    if d.shape != est.shape:
        raise ValueError(f"shape mismatch: distribution {d.shape} vs estimate {est.shape}")
    return d.matrix(), est.matrix()


def check_one_sided(d: ProductDistribution, est: EmpiricalEstimate, alpha: float) -> bool:
    """``p_ij >= p_hat_ij / (1 + alpha)**2`` for every pair."""
    if d.shape != est.shape:
        raise ValueError(f"shape mismatch: distribution {d.shape} vs estimate {est.shape}")
    g = 1.0 + alpha
    # factor-wise bounds imply the product bound
    if np.all(est.row_hat <= g * d.row.weights) and np.all(est.col_hat <= g * d.col.weights):
        return True
    p, p_hat = _pairwise(d, est)
    return bool(np.all(p >= p_hat / g**2))


def check_two_sided(d: ProductDistribution, est: EmpiricalEstimate, alpha: float) -> bool:
    """``p_hat / (1 + alpha)**2 <= p <= p_hat / (1 - alpha)**2`` for every pair."""
    if not 0 < alpha < 1:
        raise ValueError(f"two-sided check needs alpha in (0, 1), got {alpha}")
    p, p_hat = _pairwise(d, est)
    return bool(np.all(p >= p_hat / (1 + alpha) ** 2) and np.all(p <= p_hat / (1 - alpha) ** 2))


def coverage(d: ProductDistribution, alpha: float, epsilon: float, sided: Sided = "one_sided",
             trials: int = 500, seed=0, m: int | None = None) -> float:
    """Fraction of seeded stage-one runs in which the bound event holds.

    Trial ``k`` uses the generator ``stream(seed, k)``, so the result does
    not depend on the order trials are evaluated in.
    """
    plan = sample_size(d, alpha, epsilon, sided)
    m = plan.m_required if m is None else m
    check = check_one_sided if sided == "one_sided" else check_two_sided
    hits = sum(check(d, stage_one_sample(d, m, stream(seed, k)), alpha) for k in range(trials))
    return hits / trials
