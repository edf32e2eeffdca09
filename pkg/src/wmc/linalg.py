"""Dense linear algebra used throughout the package.

Every routine goes through :func:`svd`; there are no QR or eigen-solver
shortcuts, so the numerical rank and leverage scores are always derived
from the same decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# relative cutoff for numerical rank: sigma_i > RANK_RTOL * sigma_1
RANK_RTOL = 1e-9


class SvdConvergenceError(np.linalg.LinAlgError):
    """Raised when LAPACK fails to converge on every available driver."""


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.vt.T

    def rank(self, rtol: float = RANK_RTOL) -> int:
        if self.s.size == 0 or self.s[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.s > rtol * self.s[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vt


@dataclass(frozen=True)
class LeverageScores:
    row: np.ndarray
    col: np.ndarray
    rank: int

    @property
    def coherence(self) -> float:
        """Largest row or column score (the coherence mu_0)."""
        return float(max(self.row.max(), self.col.max()))


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def svd(a) -> SvdResult:
    """Thin SVD with singular values in nonincreasing order.

    The divide-and-conquer driver is tried first; on non-convergence the
    QR-iteration driver is tried before giving up.
    """
    a = as_matrix(a)
    failures = []
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        return SvdResult(u, s, vt)
    except np.linalg.LinAlgError as exc:
        failures.append(f"gesdd: {exc}")
    try:
        u, s, vt = scipy.linalg.svd(a, full_matrices=False, check_finite=False, lapack_driver="gesvd")
        return SvdResult(u, s, vt)
    except np.linalg.LinAlgError as exc:
        failures.append(f"gesvd: {exc}")
    raise SvdConvergenceError(
        f"SVD of {a.shape[0]}x{a.shape[1]} matrix did not converge after "
        f"{len(failures)} driver attempts ({'; '.join(failures)})"
    )


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def nuclear_norm(a) -> float:
    return float(svd(a).s.sum())


def shrink(s: np.ndarray, tau: float) -> np.ndarray:
    return np.maximum(s - tau, 0.0)


def svt(a, tau: float) -> np.ndarray:
    """Singular value thresholding, the proximal map of ``tau * ||.||_*``.

    Returns ``U diag(max(s - tau, 0)) V^T``, i.e. the minimiser of
    ``0.5 * ||Z - a||_F**2 + tau * ||Z||_*``.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    dec = svd(a)
    s = shrink(dec.s, tau)
    k = int(np.count_nonzero(s))
    return (dec.u[:, :k] * s[:k]) @ dec.vt[:k]


def leverage_scores(a, rtol: float = RANK_RTOL) -> LeverageScores:
    """Row and column leverage scores of the rank-r singular subspaces.

    ``mu_i = (n1 / r) ||U^T e_i||^2`` and ``nu_j = (n2 / r) ||V^T e_j||^2``,
    so the row scores sum to ``n1`` and the column scores to ``n2``.
    """
    a = as_matrix(a)
    dec = svd(a)
    r = dec.rank(rtol)
    if r == 0:
        raise ValueError("leverage scores are undefined for a rank-0 matrix")
    n1, n2 = a.shape
    row = (n1 / r) * np.sum(dec.u[:, :r] ** 2, axis=1)
    col = (n2 / r) * np.sum(dec.vt[:r] ** 2, axis=0)
    return LeverageScores(row=row, col=col, rank=r)


def random_low_rank(n: int, r: int, seed=None, n2: int | None = None) -> np.ndarray:
    """Unit-Frobenius-norm ``G1 @ G2.T`` with i.i.d. standard normal factors.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    n2 = n if n2 is None else n2
    if r < 1 or r > min(n, n2):
        raise ValueError(f"rank must satisfy 1 <= r <= min(n1, n2), got r={r}")
    rng = np.random.default_rng(seed)
    g1 = rng.standard_normal((n, r))
    g2 = rng.standard_normal((n2, r))
    m = g1 @ g2.T
    return m / np.linalg.norm(m)
