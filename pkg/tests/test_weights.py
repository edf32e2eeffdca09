import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wmc.distributions import ProbabilityVector, ProductDistribution, power_law, uniform
from wmc.sampling import EmpiricalEstimate
from wmc.weights import (CLAMP_FACTOR, WeightPair, build_weights, smallest_indices, support_sets,
                         support_size, weights_empirical_sqrt, weights_smoothed, weights_theorem3,
                         weights_true_sqrt, weights_uniform)


def sq(v):
    return ProductDistribution(v, v)


counts = st.lists(st.integers(1, 50), min_size=2, max_size=15)


def test_support_set_examples():
    # 0-based: entries 0.1 and 0.2 sit at positions 1 and 3
    assert smallest_indices([0.4, 0.1, 0.3, 0.2], 2).tolist() == [1, 3]
    assert smallest_indices(np.full(5, 0.2), 3).tolist() == [0, 1, 2]
    assert smallest_indices([3.0, 1.0, 2.0], 3).tolist() == [0, 1, 2]
    s = support_sets(uniform(6), uniform(6), 6, 1.0, 2)
    assert s.size == 3


def test_support_size_rules():
    assert support_size(10, 1.0, 3) == 3
    assert support_size(10, 0.5, 1) == 10  # capped at n
    with pytest.raises(ValueError):
        support_size(10, 4.0, 3)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20, unique=True), st.randoms(), st.data())
def test_support_sets_permutation_equivariant(v, rnd, data):
    v = np.array(v)
    k = data.draw(st.integers(1, v.size))
    perm = np.array(rnd.sample(range(v.size), v.size))
    base = set(smallest_indices(v, k).tolist())
    permuted = set(smallest_indices(v[perm], k).tolist())
    # position j of the permuted vector holds v[perm[j]]
    assert {int(perm[j]) for j in permuted} == base


def test_uniform_weights():
    w = weights_uniform(3)
    np.testing.assert_allclose(w.r, [1 / 3] * 3)
    np.testing.assert_allclose(w.c, [1 / 3] * 3)
    assert weights_uniform(2, 5).shape == (2, 5)


def test_true_sqrt():
    np.testing.assert_allclose(weights_true_sqrt(sq(uniform(4))).r, 0.5)
    p = power_law(4, 1.2)
    np.testing.assert_allclose(weights_true_sqrt(sq(p)).c, np.sqrt(p.weights))
    z = ProbabilityVector([0.0, 0.5, 0.5], True)
    with pytest.warns(RuntimeWarning, match="clamped"):
        w = weights_true_sqrt(sq(z))
    assert w.r[0] == pytest.approx(CLAMP_FACTOR / 3)


def test_empirical_sqrt():
    est = EmpiricalEstimate(np.array([2, 1]), np.array([0, 3]))
    w = weights_empirical_sqrt(est)
    np.testing.assert_allclose(w.r, [math.sqrt(2 / 3), math.sqrt(1 / 3)])
    assert w.c[0] == pytest.approx(CLAMP_FACTOR / 2) and w.c[0] > 0
    d = sq(ProbabilityVector([0.25, 0.75], True))
    exact = EmpiricalEstimate(np.array([1, 3]), np.array([1, 3]))
    np.testing.assert_allclose(weights_empirical_sqrt(exact).r, weights_true_sqrt(d).r)


def test_smoothed():
    n = 8
    est = EmpiricalEstimate(np.ones(n, int), np.ones(n, int))
    np.testing.assert_allclose(weights_smoothed(est).r, 0.5 * n ** -0.5 + 1 / (2 * n))
    est = EmpiricalEstimate(np.array([0, 4]), np.array([2, 2]))
    assert weights_smoothed(est).r[0] == 1 / 4


def test_theorem3_frozen_uniform_value():
    est = EmpiricalEstimate(np.ones(4, int), np.ones(4, int))
    w, sets = weights_theorem3(est, 1.0, 2)
    np.testing.assert_allclose(w.r, math.sqrt(1 / 32), rtol=1e-15)
    np.testing.assert_allclose(w.c, math.sqrt(1 / 32), rtol=1e-15)
    assert sets.s_r.tolist() == [0, 1]


def test_theorem3_monotone_and_agreement():
    est = EmpiricalEstimate(np.array([10, 1, 1, 1]), np.array([3, 4, 3, 3]))
    w, _ = weights_theorem3(est, 1.0, 2)
    assert np.argmax(w.r) == 0
    d = est.distribution()
    w2, _ = weights_theorem3(d, 1.0, 2)
    np.testing.assert_allclose(w.r, w2.r)
    with pytest.raises(ValueError):
        weights_theorem3(est, 3.0, 2)


@given(counts, counts.map(lambda c: c), st.sampled_from([0.5, 1.0, 1.5]), st.integers(1, 3))
def test_theorem3_ratio_identity(rc, cc, mu0, r):
    n = min(len(rc), len(cc))
    rc, cc = np.array(rc[:n]), np.array(cc[:n])
    if rc.sum() != cc.sum():
        cc = cc.copy()
        cc[-1] += rc.sum() - cc.sum()
        if cc[-1] < 1:
            return
    if math.floor(n / (mu0 * r)) < 1:
        return
    est = EmpiricalEstimate(rc, cc)
    w, sets = weights_theorem3(est, mu0, r)
    ph_r, ph_c = est.row_hat, est.col_hat
    a, b = ph_r[sets.s_r].sum(), ph_c[sets.s_c].sum()
    lhs = (w.r ** 2)[:, None] / (w.r[sets.s_r] ** 2).sum() + (w.c ** 2)[None, :] / (w.c[sets.s_c] ** 2).sum()
    rhs = (ph_r[:, None] * b + ph_c[None, :] * a) / (a * b)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=0)


def test_weight_pair_validation():
    with pytest.raises(ValueError):
        WeightPair([1.0, 0.0], [1.0])
    with pytest.raises(ValueError):
        WeightPair([1.0, np.inf], [1.0])
    w = WeightPair([1.0, 2.0], [3.0]).scaled(2.0, 0.5)
    assert w.r.tolist() == [2.0, 4.0] and w.c.tolist() == [1.5]


def test_build_weights_dispatch():
    d = sq(power_law(6, 1.2))
    est = EmpiricalEstimate(np.arange(1, 7), np.arange(6, 0, -1))
    for scheme in ("uniform", "true_sqrt", "empirical_sqrt", "smoothed", "theorem3"):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            w = build_weights(scheme, (6, 6), true=d, estimate=est, mu0=1.0, rank=2)
        assert w.scheme == scheme and np.all(w.r > 0)
    with pytest.raises(ValueError, match="unknown"):
        build_weights("bogus", (6, 6))
    with pytest.raises(ValueError):
        build_weights("theorem3", (6, 6), estimate=est)
