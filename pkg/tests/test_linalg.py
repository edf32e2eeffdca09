import numpy as np
import pytest
from hypothesis import given, strategies as st

from wmc.linalg import (SvdConvergenceError, frobenius, leverage_scores, nuclear_norm,
                        random_low_rank, shrink, svd, svt)


def test_svd_identity_and_diagonal():
    np.testing.assert_allclose(svd(np.eye(3)).s, [1, 1, 1])
    np.testing.assert_allclose(svd(np.diag([3.0, 0.0])).s, [3, 0])
    assert svd(np.diag([3.0, 0.0])).rank() == 1


def test_svd_reconstruction_and_orthonormality():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n1, n2 = rng.integers(1, 65, size=2)
        a = rng.standard_normal((n1, n2))
        dec = svd(a)
        assert frobenius(dec.reconstruct() - a) <= 1e-8 * frobenius(a)
        k = dec.s.size
        np.testing.assert_allclose(dec.u.T @ dec.u, np.eye(k), atol=1e-10)
        np.testing.assert_allclose(dec.v.T @ dec.v, np.eye(k), atol=1e-10)
        assert np.all(np.diff(dec.s) <= 0) and np.all(dec.s >= 0)


def test_svd_rejects_bad_input():
    with pytest.raises(ValueError):
        svd(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        svd(np.ones(3))


def test_svd_failure_is_explicit(monkeypatch):
    import scipy.linalg

    def boom(*a, **k):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(np.linalg, "svd", boom)
    monkeypatch.setattr(scipy.linalg, "svd", boom)
    with pytest.raises(SvdConvergenceError, match="2 driver attempts"):
        svd(np.eye(2))


def test_nuclear_norm_examples():
    assert nuclear_norm(np.eye(4)) == pytest.approx(4)
    u = np.array([0.6, 0.8])
    v = np.array([0.0, 1.0, 0.0])
    assert nuclear_norm(np.outer(u, v)) == pytest.approx(1)
    assert nuclear_norm(np.diag([2.0, 1.0, 0.0])) == pytest.approx(3)


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_nuclear_dominates_frobenius(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    assert nuclear_norm(a) >= frobenius(a) - 1e-12
    one = np.outer(rng.standard_normal(n), rng.standard_normal(n))
    assert nuclear_norm(one) == pytest.approx(frobenius(one), rel=1e-10)
    # full rank: strictly larger
    assert nuclear_norm(a) > frobenius(a) * (1 + 1e-9)


def test_svt_examples():
    np.testing.assert_allclose(svt(np.diag([3.0, 1.0]), 1.0), np.diag([2.0, 0.0]), atol=1e-14)
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 4))
    assert np.all(svt(a, svd(a).s[0]) == 0)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    oracle = u @ np.diag(np.maximum(s - 0.5, 0)) @ vt
    np.testing.assert_allclose(svt(a, 0.5), oracle, atol=1e-10)
    with pytest.raises(ValueError):
        svt(a, 0.0)


def _prox_obj(z, a, tau):
    return 0.5 * np.sum((z - a) ** 2) + tau * np.linalg.norm(z, "nuc")


def test_svt_is_prox_minimiser_small():
    rng = np.random.default_rng(11)
    for _ in range(10):
        a = rng.standard_normal((5, 5))
        for tau in (0.1, 1.0):
            z = svt(a, tau)
            base = _prox_obj(z, a, tau)
            for _ in range(20):
                e = rng.standard_normal((5, 5))
                e /= np.linalg.norm(e)
                assert _prox_obj(z + 1e-4 * e, a, tau) >= base - 1e-10


def test_shrink():
    np.testing.assert_array_equal(shrink(np.array([3.0, 1.0, 0.2]), 0.5), [2.5, 0.5, 0.0])


def test_leverage_examples():
    lev = leverage_scores(np.ones((5, 5)))
    np.testing.assert_allclose(lev.row, 1)
    np.testing.assert_allclose(lev.col, 1)
    assert lev.rank == 1 and lev.coherence == pytest.approx(1)
    e = np.zeros((4, 4))
    e[0, 0] = 1
    lev = leverage_scores(e)
    np.testing.assert_allclose(lev.row, [4, 0, 0, 0], atol=1e-12)
    assert lev.coherence == pytest.approx(4)
    m = random_low_rank(10, 3, 5)
    lev = leverage_scores(m)
    assert lev.rank == 3
    assert lev.row.sum() == pytest.approx(10, abs=1e-8)
    with pytest.raises(ValueError):
        leverage_scores(np.zeros((3, 3)))


def test_leverage_rectangular_sums():
    m = random_low_rank(7, 2, 1, n2=12)
    lev = leverage_scores(m)
    assert lev.row.sum() == pytest.approx(7, abs=1e-8)
    assert lev.col.sum() == pytest.approx(12, abs=1e-8)
    assert np.all(lev.row >= 0) and np.all(lev.col >= 0)


def test_random_low_rank():
    m = random_low_rank(5, 5, 0)
    assert svd(m).rank() == 5
    assert frobenius(m) == pytest.approx(1, abs=1e-12)
    big = random_low_rank(500, 5, 1)
    assert svd(big).rank() == 5
    np.testing.assert_array_equal(random_low_rank(8, 2, 42), random_low_rank(8, 2, 42))
    with pytest.raises(ValueError):
        random_low_rank(3, 4, 0)
    with pytest.raises(ValueError):
        random_low_rank(3, 0, 0)
