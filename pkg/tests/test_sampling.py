import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from wmc.distributions import ProbabilityVector, ProductDistribution, power_law, uniform
from wmc.sampling import (EmpiricalEstimate, ObservationSet, bernoulli_probabilities, draw_pairs,
                          expected_unique_fraction, stage_one_sample, stage_two_mask,
                          stage_two_sample, stream, unique_fraction_curve)


def sq(v):
    return ProductDistribution(v, v)


def test_counts_arithmetic_from_injected_pairs():
    # pairs (1,2),(1,2),(2,1) in 1-based terms
    est = EmpiricalEstimate.from_pairs([0, 0, 1], [1, 1, 0], (2, 2))
    np.testing.assert_allclose(est.row_hat, [2 / 3, 1 / 3])
    np.testing.assert_allclose(est.col_hat, [1 / 3, 2 / 3])
    assert est.m == 3


def test_single_draw():
    est = stage_one_sample(sq(uniform(5)), 1, 3)
    assert sorted(est.row_hat.tolist()) == [0, 0, 0, 0, 1]


@given(st.integers(1, 500), st.integers(0, 2**32))
def test_estimate_sums_exactly_one(m, seed):
    est = stage_one_sample(sq(power_law(7, 1.3)), m, seed)
    assert est.row_counts.sum() == est.col_counts.sum() == m
    assert est.row_hat.sum() == pytest.approx(1, abs=1e-15)
    assert est.col_hat.sum() == pytest.approx(1, abs=1e-15)
    est.distribution()  # normalised flag validates


def test_large_m_concentrates():
    d = sq(uniform(4))
    worst = max(np.abs(stage_one_sample(d, 100_000, s).row_hat - 0.25).max() for s in range(50))
    assert worst < 0.01


def test_stage_one_preconditions():
    with pytest.raises(ValueError):
        stage_one_sample(ProductDistribution(ProbabilityVector([1, 1]), uniform(2)), 5, 0)
    with pytest.raises(ValueError):
        stage_one_sample(sq(uniform(2)), 0, 0)


def test_draws_are_prefix_consistent_and_deterministic():
    d = sq(power_law(9, 1.1))
    r1, c1 = draw_pairs(d, 50, 123)
    r2, c2 = draw_pairs(d, 20, 123)
    np.testing.assert_array_equal(r1[:20], r2)
    np.testing.assert_array_equal(c1[:20], c2)
    np.testing.assert_array_equal(draw_pairs(d, 50, 123)[0], r1)


def test_merge_matches_single_run_in_distribution():
    d = sq(power_law(4, 1.0))
    runs = 10_000
    full = np.array([stage_one_sample(d, 20, stream(1, k)).row_counts[0] for k in range(runs)])
    merged = np.array([
        stage_one_sample(d, 10, stream(2, k, 0)).merge(stage_one_sample(d, 10, stream(2, k, 1))).row_counts[0]
        for k in range(runs)
    ])
    edges = np.arange(0, 22)
    h1, _ = np.histogram(full, edges)
    h2, _ = np.histogram(merged, edges)
    keep = (h1 + h2) >= 10
    table = np.vstack([h1[keep], h2[keep]])
    _, pval, _, _ = stats.chi2_contingency(table)
    assert pval > 0.01


def test_stage_two_examples():
    m = np.arange(12.0).reshape(3, 4)
    rates = ProductDistribution(uniform(3), uniform(4))
    obs = stage_two_sample(m, rates, 1e6, 0)
    assert len(obs) == 12
    np.testing.assert_array_equal(obs.dense(), m)
    assert len(stage_two_sample(m, rates, 1e-12, 0)) == 0
    with pytest.raises(ValueError):
        bernoulli_probabilities(rates, 0.0)


def test_stage_two_binomial_mean():
    n, q = 50, 0.3
    ones = ProbabilityVector(np.ones(n))
    rates = ProductDistribution(ones, ones)
    sizes = np.array([len(stage_two_sample(np.zeros((n, n)), rates, q, stream(9, s))) for s in range(200)])
    mean, sd = n * n * q, np.sqrt(n * n * q * (1 - q))
    assert abs(sizes.mean() - mean) <= 3 * sd / np.sqrt(200)


def test_stage_two_per_entry_frequency():
    rates = ProductDistribution(ProbabilityVector([0.1, 0.2, 0.3, 0.4]), ProbabilityVector([0.5, 1.0, 1.5, 3.0]))
    prob = bernoulli_probabilities(rates, 1.0)
    seeds = 10_000
    hits = sum(stage_two_mask(rates, 1.0, stream(4, s)).astype(int) for s in range(seeds))
    sd = np.sqrt(seeds * prob * (1 - prob))
    assert np.all(np.abs(hits - seeds * prob) <= 3 * sd + 1e-12)
    assert prob.max() == 1.0  # clamped entries


def test_streams_independent_and_reproducible():
    a = stream(5, 1, 0).random(8)
    b = stream(5, 1, 1).random(8)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, stream(5, 1, 0).random(8))
    # order independence: creating other streams first changes nothing
    stream(5, 9).random(100)
    np.testing.assert_array_equal(a, stream(5, 1, 0).random(8))


def test_observation_set_validation():
    with pytest.raises(ValueError, match="duplicate"):
        ObservationSet((2, 2), [0, 0], [1, 1], [1.0, 2.0])
    with pytest.raises(ValueError, match="range"):
        ObservationSet((2, 2), [2], [0], [1.0])
    with pytest.raises(ValueError):
        ObservationSet((2, 2), [0], [0], [np.nan])
    obs = ObservationSet((2, 3), [1, 0], [2, 1], [5.0, 6.0])
    assert obs.rows.tolist() == [0, 1] and obs.values.tolist() == [6.0, 5.0]
    assert obs.fraction == pytest.approx(2 / 6)


def test_from_pairs_keeps_distinct():
    m = np.arange(9.0).reshape(3, 3)
    obs = ObservationSet.from_pairs(m, [0, 0, 2, 0], [1, 1, 2, 1])
    assert len(obs) == 2
    assert obs.values.tolist() == [1.0, 8.0]


@given(seed=st.integers(0, 10_000))
def test_csv_round_trip(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((5, 6))
    obs = ObservationSet.from_mask(m, rng.random((5, 6)) < 0.5)
    path = tmp_path_factory.mktemp("csv") / "obs.csv"
    obs.to_csv(path)
    back = ObservationSet.from_csv(path, shape=(5, 6))
    np.testing.assert_array_equal(back.rows, obs.rows)
    np.testing.assert_array_equal(back.cols, obs.cols)
    np.testing.assert_array_equal(back.values, obs.values)
    assert path.read_text().splitlines()[0] == "i,j,value"


def test_csv_header_checked(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("row,col,v\n0,0,1\n")
    with pytest.raises(ValueError, match="header"):
        ObservationSet.from_csv(p)


def test_unique_fraction_basics():
    d = sq(uniform(6))
    curve = unique_fraction_curve(d, [0, 10, 100, 5000], seeds=range(5))
    fr = [f for _, f in curve]
    assert fr[0] == 0.0
    assert all(b >= a for a, b in zip(fr, fr[1:]))
    assert fr[-1] == pytest.approx(1.0)


def test_unique_fraction_analytic_n20_m400():
    d = sq(power_law(20, 1.2))
    mc = unique_fraction_curve(d, [400], seeds=range(500))[0][1]
    exact = expected_unique_fraction(d, 400)
    assert abs(mc - exact) <= 0.02 * exact


def test_expected_unique_fraction_oracle():
    d = sq(power_law(5, 0.7))
    p = np.outer(d.row.weights, d.col.weights)
    assert expected_unique_fraction(d, 37) == pytest.approx(np.mean(1 - (1 - p) ** 37), rel=1e-13)
