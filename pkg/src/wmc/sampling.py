"""Two-stage sampling: estimating the sampling distribution, then revealing entries.

Stage one draws ``m`` i.i.d. index pairs from a product distribution and
keeps only the row and column counts. Stage two reveals each matrix entry
independently with probability ``min(1, multiplier * rate_ij)``.

Seeds are anything :func:`numpy.random.default_rng` accepts. Use
:func:`stream` to derive independent generators from a master seed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .distributions import ProbabilityVector, ProductDistribution


def stream(seed, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``seed`` (order-independent)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def _cdf(p: ProbabilityVector) -> np.ndarray:
    c = np.cumsum(p.weights / p.weights.sum())
    c[-1] = 1.0
    return c


def draw_pairs(d: ProductDistribution, m: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``m`` i.i.d. (row, col) pairs by inverse-CDF lookup on each factor.

    One uniform pair is consumed per draw, so the first ``k`` pairs of a
    draw of size ``m`` equal a draw of size ``k`` from the same seed.
    """
    rng = np.random.default_rng(rng)
    u = rng.random((m, 2))
    rows = np.searchsorted(_cdf(d.row), u[:, 0], side="right")
    cols = np.searchsorted(_cdf(d.col), u[:, 1], side="right")
    return rows, cols


@dataclass(frozen=True)
class EmpiricalEstimate:
    """Row/column empirical estimators built from integer counts."""

    row_counts: np.ndarray
    col_counts: np.ndarray

    def __post_init__(self):
        rc = np.asarray(self.row_counts, dtype=np.int64)
        cc = np.asarray(self.col_counts, dtype=np.int64)
        if rc.sum() != cc.sum() or rc.sum() < 1:
            raise ValueError("row and column counts must share a positive total")
        object.__setattr__(self, "row_counts", rc)
        object.__setattr__(self, "col_counts", cc)

    @property
    def m(self) -> int:
        return int(self.row_counts.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.row_counts.size, self.col_counts.size

    @property
    def row_hat(self) -> np.ndarray:
        return self.row_counts / self.m

    @property
    def col_hat(self) -> np.ndarray:
        return self.col_counts / self.m

    def distribution(self) -> ProductDistribution:
        return ProductDistribution(
            ProbabilityVector(self.row_hat, normalized=True),
            ProbabilityVector(self.col_hat, normalized=True),
        )

    def matrix(self) -> np.ndarray:
        return np.outer(self.row_hat, self.col_hat)

    def merge(self, other: "EmpiricalEstimate") -> "EmpiricalEstimate":
        if self.shape != other.shape:
            raise ValueError("cannot merge estimates of different shapes")
        return EmpiricalEstimate(
            self.row_counts + other.row_counts, self.col_counts + other.col_counts
        )

    @classmethod
    def from_pairs(cls, rows, cols, shape: tuple[int, int]) -> "EmpiricalEstimate":
        n1, n2 = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return cls(np.bincount(rows, minlength=n1), np.bincount(cols, minlength=n2))


def stage_one_sample(d: ProductDistribution, m: int, seed=None) -> EmpiricalEstimate:
    """Estimate the factors of ``d`` from ``m`` draws; entries stay hidden."""
    if not d.normalized:
        raise ValueError("stage one samples a normalised distribution")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rows, cols = draw_pairs(d, m, seed)
    return EmpiricalEstimate.from_pairs(rows, cols, d.shape)


@dataclass(frozen=True)
class ObservationSet:
    """Revealed entries, stored in row-major index order without duplicates."""

    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        n1, n2 = self.shape
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        if not (rows.shape == cols.shape == values.shape) or rows.ndim != 1:
            raise ValueError("rows, cols and values must be 1-d and equally long")
        if rows.size and (rows.min() < 0 or rows.max() >= n1 or cols.min() < 0 or cols.max() >= n2):
            raise ValueError("observation index out of range")
        if not np.all(np.isfinite(values)):
            raise ValueError("observed values must be finite")
        flat = rows * n2 + cols
        order = np.argsort(flat, kind="stable")
        flat = flat[order]
        if flat.size > 1 and np.any(flat[1:] == flat[:-1]):
            raise ValueError("duplicate observation indices")
        object.__setattr__(self, "shape", (int(n1), int(n2)))
        object.__setattr__(self, "rows", rows[order])
        object.__setattr__(self, "cols", cols[order])
        object.__setattr__(self, "values", values[order])

    def __len__(self):
        return self.rows.size

    @property
    def fraction(self) -> float:
        return len(self) / (self.shape[0] * self.shape[1])

    def mask(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=bool)
        out[self.rows, self.cols] = True
        return out

    def dense(self) -> np.ndarray:
        """Observed values in place, zeros elsewhere."""
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.values
        return out

    @classmethod
    def from_mask(cls, matrix, mask) -> "ObservationSet":
        matrix = np.asarray(matrix, dtype=float)
        rows, cols = np.nonzero(np.asarray(mask, dtype=bool))
        return cls(matrix.shape, rows, cols, matrix[rows, cols])

    @classmethod
    def from_pairs(cls, matrix, rows, cols) -> "ObservationSet":
        """Distinct pairs among (possibly repeated) draws."""
        matrix = np.asarray(matrix, dtype=float)
        n2 = matrix.shape[1]
        flat = np.unique(np.asarray(rows, dtype=np.int64) * n2 + np.asarray(cols, dtype=np.int64))
        r, c = np.divmod(flat, n2)
        return cls(matrix.shape, r, c, matrix[r, c])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "value"])
            for i, j, v in zip(self.rows, self.cols, self.values):
                w.writerow([int(i), int(j), repr(float(v))])

    @classmethod
    def from_csv(cls, path, shape: tuple[int, int] | None = None) -> "ObservationSet":
        rows, cols, values = [], [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["i", "j", "value"]:
                raise ValueError(f"{path}: header must be 'i,j,value'")
            for rec in reader:
                rows.append(int(rec["i"]))
                cols.append(int(rec["j"]))
                values.append(float(rec["value"]))
        if shape is None:
            if not rows:
                raise ValueError(f"{path}: empty observation file needs an explicit shape")
            shape = (max(rows) + 1, max(cols) + 1)
        return cls(tuple(shape), np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(values))


def bernoulli_probabilities(rates: ProductDistribution, multiplier: float) -> np.ndarray:
    if not multiplier > 0:
        raise ValueError(f"multiplier must be positive, got {multiplier}")
    return np.minimum(1.0, multiplier * rates.matrix())


def stage_two_mask(rates: ProductDistribution, multiplier: float, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    prob = bernoulli_probabilities(rates, multiplier)
    return rng.random(prob.shape) < prob


def stage_two_sample(matrix, rates: ProductDistribution, multiplier: float, seed=None) -> ObservationSet:
    """Reveal each entry independently with probability ``min(1, multiplier * rate_ij)``."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != rates.shape:
        raise ValueError(f"matrix shape {matrix.shape} does not match rates {rates.shape}")
    return ObservationSet.from_mask(matrix, stage_two_mask(rates, multiplier, seed))


def expected_unique_fraction(d: ProductDistribution, m: int) -> float:
    """``mean_ij (1 - (1 - p_ij) ** m)`` for ``m`` draws with replacement."""
    p = d.matrix() / d.total
    return float(np.mean(-np.expm1(m * np.log1p(-p))))


def unique_fraction_curve(d: ProductDistribution, m_grid, shape=None, seeds=(0,)) -> list[tuple[int, float]]:
    """Monte Carlo mean fraction of distinct entries hit by ``m`` draws.

    Each seed draws ``max(m_grid)`` pairs once; smaller ``m`` use prefixes.
    """
    if not d.normalized:
        raise ValueError("unique-fraction curve needs a normalised distribution")
    if shape is not None and tuple(shape) != d.shape:
        raise ValueError(f"shape {tuple(shape)} does not match distribution {d.shape}")
    n1, n2 = d.shape
    grid = [int(m) for m in m_grid]
    if any(m < 0 for m in grid):
        raise ValueError("sample counts must be >= 0")
    seeds = list(seeds)
    top = max(grid, default=0)
    totals = np.zeros(len(grid))
    for seed in seeds:
        rows, cols = draw_pairs(d, top, seed)
        flat = rows * n2 + cols
        # position of first occurrence of each entry -> distinct count for every prefix
        _, first = np.unique(flat, return_index=True)
        first.sort()
        for k, m in enumerate(grid):
            totals[k] += np.searchsorted(first, m, side="left")
    means = totals / (len(seeds) * n1 * n2)
    return [(m, float(f)) for m, f in zip(grid, means)]
