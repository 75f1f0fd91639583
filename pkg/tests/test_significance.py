import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from sigrule.measures import ContingencyTable, JointDistribution, UndefinedMeasure, chi2_rule
from sigrule.relation import Relation
from sigrule.significance import (
    EXACT_LIMIT,
    SignificanceConfig,
    assess,
    binomial_tail_p,
    bonferroni_threshold,
    chebyshev_bound,
    min_confidence_for_significance,
    min_frequency_for_significance,
    morishita_chi2_bound,
    normal_tail_p,
    safe_min_frequency,
    t_hat_frcf,
    t_hat_frgamma,
    t_statistic,
    t_statistic_set,
    theorem1_frequency_at_K,
)


def tail_oracle(m, n, p0):
    p = Fraction(p0)
    return sum(math.comb(n, i) * p ** i * (1 - p) ** (n - i) for i in range(m, n + 1))


def test_t_base_table():
    ct = ContingencyTable(30, 20, 20, 30)
    oracle = mpmath.mpf(5) / 100 * 10 / mpmath.sqrt(mpmath.mpf(3) / 16)
    assert t_statistic(ct) == pytest.approx(float(oracle), rel=1e-14)
    assert t_statistic(ContingencyTable(25, 25, 25, 25)) == 0.0


def test_t_epsilon_family():
    assert t_statistic(ContingencyTable(9996, 0, 0, 4)) == pytest.approx(2 / math.sqrt(1.9996), rel=1e-14)


def test_t_undefined():
    with pytest.raises(UndefinedMeasure):
        t_statistic(ContingencyTable(0, 0, 3, 4))
    with pytest.raises(UndefinedMeasure):
        t_statistic(ContingencyTable(5, 0, 0, 0))


def test_t_set_reduces_to_rule():
    rng = np.random.default_rng(1)
    rel = Relation.from_matrix((rng.random((90, 2)) < 0.5).astype(np.uint8))
    ct = ContingencyTable.from_relation(rel, rel.event("A1"), rel.event("A2"))
    assert t_statistic_set(rel, rel.event("A1,A2")) == pytest.approx(t_statistic(ct), rel=1e-12)
    dist = JointDistribution.from_relation(rel)
    assert t_statistic_set(dist, {"A1": True, "A2": True}, rel.n) == pytest.approx(t_statistic(ct), rel=1e-9)


def test_t_set_hand_built():
    rows = [[1, 1, 1], [1, 1, 1], [1, 0, 1], [0, 1, 0], [1, 1, 0], [0, 0, 1], [0, 0, 0], [1, 0, 0]]
    rel = Relation.from_matrix(np.array(rows, dtype=np.uint8), list("ABC"))
    # m = 2, P(A)=5/8, P(B)=4/8, P(C)=4/8
    n, m = 8, 2
    prod = mpmath.mpf(5 * 4 * 4) / 8 ** 3
    want = (m - n * prod) / mpmath.sqrt(n * prod * (1 - prod))
    assert t_statistic_set(rel, rel.event("A,B,C")) == pytest.approx(float(want), rel=1e-14)


def test_t_set_independent_sample():
    rng = np.random.default_rng(2)
    rel = Relation.from_matrix((rng.random((2000, 3)) < [0.3, 0.5, 0.6]).astype(np.uint8))
    assert abs(t_statistic_set(rel, rel.event("A1,A2,A3"))) < 4


def test_binomial_tail_small():
    assert binomial_tail_p(0, 10, 0.3) == 1.0
    assert binomial_tail_p(5, 10, 0.25) == pytest.approx(float(tail_oracle(5, 10, Fraction(1, 4))), rel=1e-12)
    with pytest.raises(ValueError):
        binomial_tail_p(11, 10, 0.5)


@pytest.mark.parametrize("m, n, p0", [(2600, 10_000, 0.25), (60, 1000, 0.03), (9999, 10_000, 0.999), (7, 50, 0.5)])
def test_binomial_tail_mpmath(m, n, p0):
    with mpmath.workdps(40):
        p = mpmath.mpf(p0)
        want = mpmath.fsum(mpmath.binomial(n, i) * p ** i * (1 - p) ** (n - i) for i in range(m, n + 1))
    assert binomial_tail_p(m, n, p0) == pytest.approx(float(want), rel=1e-9)


def test_binomial_tail_monotone():
    for n, p0 in ((30, 0.2), (200, 0.7)):
        tails = [binomial_tail_p(m, n, p0) for m in range(n + 1)]
        assert all(b <= a for a, b in zip(tails, tails[1:]))


def test_normal_tail():
    assert normal_tail_p(0) == 0.5
    assert normal_tail_p(2) == pytest.approx(float(mpmath.ncdf(-2)), rel=1e-14)
    assert round(normal_tail_p(2), 5) == 0.02275


def test_normal_vs_exact_at_two_sigma():
    n, p0 = 10_000, 0.25
    sd = math.sqrt(n * p0 * (1 - p0))
    m = math.ceil(n * p0 + 2 * sd)
    t = (m - n * p0) / sd
    assert binomial_tail_p(m, n, p0) == pytest.approx(normal_tail_p(t), rel=0.10)


def test_chebyshev_and_bonferroni():
    assert chebyshev_bound(2) == 0.125
    assert chebyshev_bound(10) == 0.005
    for K in range(1, 9):
        assert chebyshev_bound(K) >= normal_tail_p(K)
    with pytest.raises(ValueError):
        chebyshev_bound(0)
    assert bonferroni_threshold(2, 16) == 8
    assert SignificanceConfig(K=2, bonferroni_tests=9).effective_K == 6


def test_assess():
    res = assess(ContingencyTable(30, 20, 20, 30))
    assert res.approx_valid and res.expected_count == 25
    assert res.p_exact == pytest.approx(float(tail_oracle(30, 100, Fraction(1, 4))), rel=1e-12)
    big = ContingencyTable.from_counts(EXACT_LIMIT + 1, 50_000, 50_000, 25_100)
    assert assess(big).p_exact is None
    tiny = assess(ContingencyTable(1, 1, 1, 7))
    assert not tiny.approx_valid


def test_min_bounds_example():
    assert min_confidence_for_significance(0.5, 0.5, 10_000, 10) == pytest.approx(0.5 + 10 * math.sqrt(3) / 200, abs=1e-12)
    assert min_frequency_for_significance(0.5, 0.5, 10_000, 10) == pytest.approx(0.25 + 10 * math.sqrt(3) / 400, abs=1e-12)
    assert min_frequency_for_significance(0.3, 0.6, 500, 0) == pytest.approx(0.18)
    with pytest.raises(ValueError):
        min_frequency_for_significance(1.0, 0.5, 100, 2)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(100, 10**6), st.floats(0.5, 6))
def test_min_bounds_round_trip(px, py, n, K):
    fr = min_frequency_for_significance(px, py, n, K)
    assume(fr <= min(px, py))
    ct = ContingencyTable.from_probabilities(px, py, fr, n)
    assert t_statistic(ct) == pytest.approx(K, abs=1e-9)
    assert min_confidence_for_significance(px, py, n, K) * px == pytest.approx(fr, rel=1e-15)


def test_frequency_at_K():
    assert theorem1_frequency_at_K(2, 10_000, 2) == pytest.approx(8 / 10004, rel=1e-15)
    solved = brentq(lambda p: math.sqrt(10_000 * p) * (2 - 1) / math.sqrt(2 - p) - 2, 1e-12, 0.5, xtol=1e-15)
    assert theorem1_frequency_at_K(2, 10_000, 2) == pytest.approx(solved, rel=1e-9)
    assert theorem1_frequency_at_K(3, 10_000, 1e-6) < 1e-12
    with pytest.raises(ValueError):
        theorem1_frequency_at_K(1, 100, 2)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.01, 50), st.integers(10, 10**7), st.floats(0.5, 8))
def test_frequency_at_K_round_trip(gamma, n, K):
    fr = theorem1_frequency_at_K(gamma, n, K)
    assume(fr * gamma <= 1)
    assert math.sqrt(n) * t_hat_frgamma(fr, gamma) == pytest.approx(K, rel=1e-9)


def test_safe_min_frequency():
    assert safe_min_frequency(0.5, 10_000, 2) == pytest.approx(2 / 2501, rel=1e-15)
    values = [safe_min_frequency(0.2, n, 2) for n in (10, 100, 1000, 10_000)]
    assert all(b < a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        safe_min_frequency(1.0, 100, 2)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.001, 0.999), st.integers(1, 10**6), st.floats(0.1, 10))
def test_safe_min_frequency_identity(p, n, K):
    assert safe_min_frequency(p, n, K) == theorem1_frequency_at_K(1 / p, n, K)
    k2 = K * K
    assert safe_min_frequency(p, n, K) == pytest.approx(k2 * p / (n * (1 - p) ** 2 + k2 * p * p), rel=1e-12)


def test_t_hat_forms_match_tables():
    rng = np.random.default_rng(3)
    for _ in range(200):
        cells = rng.multinomial(1000, rng.dirichlet(np.ones(4)))
        ct = ContingencyTable(*(int(c) for c in cells))
        if not (0 < ct.n_x < ct.n and 0 < ct.n_y < ct.n and ct.c11 > 0):
            continue
        fr, cf = ct.c11 / ct.n, ct.c11 / ct.n_x
        gamma = ct.c11 * ct.n / (ct.n_x * ct.n_y)
        t = t_statistic(ct)
        assert math.sqrt(ct.n) * t_hat_frcf(fr, cf, ct.p_y) == pytest.approx(t, rel=1e-9, abs=1e-9)
        assert math.sqrt(ct.n) * t_hat_frgamma(fr, gamma) == pytest.approx(t, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0, 1), st.integers(10, 10**5))
def test_t_antisymmetric_in_d(px, py, frac, n):
    d = frac * min(px * (1 - py), (1 - px) * py, px * py, (1 - px) * (1 - py))
    up = ContingencyTable.from_probabilities(px, py, px * py + d, n)
    down = ContingencyTable.from_probabilities(px, py, px * py - d, n)
    assert t_statistic(up) == pytest.approx(-t_statistic(down), rel=1e-9, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.tuples(*(st.integers(0, 500) for _ in range(4))))
def test_chi2_dominates_t_squared(cells):
    ct = ContingencyTable(*cells) if sum(cells) else None
    assume(ct is not None and 0 < ct.n_x < ct.n and 0 < ct.n_y < ct.n)
    assert chi2_rule(ct) >= t_statistic(ct) ** 2 - 1e-9


def test_normal_approximation_regime():
    # moderate marginals, tables drawn under independence: within 10%
    rng = np.random.default_rng(4)
    for _ in range(300):
        n = int(rng.integers(1000, 20_000))
        px, py = rng.uniform(0.2, 0.8, 2)
        cells = rng.multinomial(n, [px * py, px * (1 - py), (1 - px) * py, (1 - px) * (1 - py)])
        ct = ContingencyTable(*(int(c) for c in cells))
        res = assess(ct)
        assert res.approx_valid
        assert res.p_normal == pytest.approx(res.p_exact, rel=0.10)


def test_normal_approximation_breaks_in_skewed_tail():
    # expected count well above 5, yet the uncorrected normal tail is off by far more than 10%
    n, p0 = 10_000, 0.0025
    m = 40
    ct = ContingencyTable.from_counts(n, 500, 500, m)
    res = assess(ct)
    assert res.approx_valid and res.expected_count == 25
    assert abs(res.p_exact - res.p_normal) / res.p_exact > 0.5


def test_morishita_example():
    ct = ContingencyTable.from_probabilities(0.5, 0.5, 0.3, n=100)  # P(Z,C)=0.3, P(Z,!C)=0.2
    assert morishita_chi2_bound(ct) == pytest.approx(max(100 * 0.3 * 0.5 / (0.7 * 0.5), 100 * 0.2 * 0.5 / (0.8 * 0.5)))
    assert morishita_chi2_bound(ct) == pytest.approx(300 / 7)
    assert morishita_chi2_bound(ct) >= chi2_rule(ct)
    with pytest.raises(ValueError):
        morishita_chi2_bound(ContingencyTable(3, 0, 1, 0))  # P(C) = 1
