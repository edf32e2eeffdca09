"""Product-form sampling distributions ``p_ij = row_i * col_j``.

Only the two factors are stored. Unnormalised factors describe Bernoulli
rate matrices; the total mass is ``row.sum() * col.sum()``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

NORMALIZED_ATOL = 1e-12


@dataclass(frozen=True)
class ProbabilityVector:
    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("probability vector must be a non-empty 1-d array")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("probability vector entries must be finite and >= 0")
        if not np.any(w > 0):
            raise ValueError("probability vector needs at least one positive entry")
        if self.normalized and abs(w.sum() - 1.0) > NORMALIZED_ATOL:
            raise ValueError(f"flagged normalized but sums to {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def from_values(cls, values) -> "ProbabilityVector":
        """Wrap values, setting the flag when they already sum to one."""
        w = np.asarray(values, dtype=float)
        return cls(w, normalized=bool(abs(w.sum() - 1.0) <= NORMALIZED_ATOL))


@dataclass(frozen=True)
class ProductDistribution:
    row: ProbabilityVector
    col: ProbabilityVector

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row), len(self.col)

    @property
    def normalized(self) -> bool:
        return self.row.normalized and self.col.normalized

    @property
    def total(self) -> float:
        """Mass of the implied matrix, computed from the factor sums."""
        return self.row.total * self.col.total

    def matrix(self) -> np.ndarray:
        return np.outer(self.row.weights, self.col.weights)

    def entry(self, i: int, j: int) -> float:
        return float(self.row.weights[i] * self.col.weights[j])

    @classmethod
    def square(cls, vec: ProbabilityVector) -> "ProductDistribution":
        return cls(vec, vec)


def normalize(p: ProbabilityVector) -> ProbabilityVector:
    total = p.weights.sum()
    if not total > 0:
        raise ValueError("cannot normalise an all-zero vector")
    if p.normalized:
        return p
    w = p.weights / total
    # absorb the last-ulp rounding so the sum check holds
    w = w / w.sum()
    return ProbabilityVector(w, normalized=True)


def normalize_product(d: ProductDistribution) -> ProductDistribution:
    return ProductDistribution(normalize(d.row), normalize(d.col))


def uniform(n: int) -> ProbabilityVector:
    return ProbabilityVector(np.full(n, 1.0 / n), normalized=True)


def power_law(n: int, exponent: float) -> ProbabilityVector:
    """Weights proportional to ``i ** -exponent`` for ``i = 1..n``, normalised."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not exponent > 0:
        raise ValueError(f"exponent must be positive, got {exponent}")
    w = np.arange(1, n + 1, dtype=float) ** (-float(exponent))
    return normalize(ProbabilityVector(w))


def min_component(p: ProbabilityVector) -> tuple[int, float]:
    """Smallest entry and the lowest (0-based) index attaining it."""
    idx = int(np.argmin(p.weights))
    return idx, float(p.weights[idx])


def alpha_max(d: ProductDistribution) -> float:
    """Right end of the admissible open interval ``(0, alpha_max)``.

    ``alpha_max = 1 / max(min row, min col)``, which guarantees
    ``alpha * min(row) <= 1`` and ``alpha * min(col) <= 1``.
    """
    if not d.normalized:
        raise ValueError("alpha range is defined for normalised factors")
    lo = float(max(d.row.weights.min(), d.col.weights.min()))
    # both factors have a zero entry: every alpha keeps alpha * min <= 1
    return np.inf if lo == 0.0 else 1.0 / lo


def alpha_range(d: ProductDistribution) -> tuple[float, float]:
    return 0.0, alpha_max(d)


def load_vectors(path) -> list[ProbabilityVector]:
    """Read one vector per non-blank line of whitespace-separated reals."""
    vectors = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        vectors.append(ProbabilityVector.from_values(values))
    return vectors


def load_product(path) -> ProductDistribution:
    """A file with one line is used for both factors; two lines give row, col."""
    vectors = load_vectors(path)
    if len(vectors) == 1:
        return ProductDistribution.square(vectors[0])
    if len(vectors) == 2:
        return ProductDistribution(vectors[0], vectors[1])
    raise ValueError(f"{path}: expected 1 or 2 vectors, found {len(vectors)}")


def save_vectors(path, *vectors) -> None:
    lines = [" ".join(repr(float(x)) for x in np.asarray(v, dtype=float)) for v in vectors]
    Path(path).write_text("\n".join(lines) + "\n")
