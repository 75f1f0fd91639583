"""Significance of rules under the independence null.

The canonical statistic is the standardized count ``t``; the exact upper
binomial tail and its normal approximation are available alongside.  The
closed-form bounds relate ``t`` to frequency, confidence and the degree of
dependence, and give a global frequency floor that loses no significant rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .measures import ContingencyTable, JointDistribution, Number, UndefinedMeasure
from .relation import Event, Relation

#: Exact binomial tails are computed up to this many rows.
EXACT_LIMIT = 100_000


@dataclass(frozen=True)
class SignificanceConfig:
    K: float = 2.0
    bonferroni_tests: int | None = None
    approx_rule_min_expected: float = 5.0

    def __post_init__(self) -> None:
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if self.bonferroni_tests is not None and self.bonferroni_tests < 1:
            raise ValueError("number of tests must be positive")

    @property
    def effective_K(self) -> float:
        if self.bonferroni_tests is None:
            return self.K
        return bonferroni_threshold(self.K, self.bonferroni_tests)


@dataclass(frozen=True)
class SignificanceResult:
    t_value: float
    p_exact: float | None
    p_normal: float
    approx_valid: bool
    expected_count: float


def t_statistic(ct: ContingencyTable) -> float:
    """Standardized joint count ``(m - n P(X)P(Y)) / sqrt(n P(X)P(Y)(1 - P(X)P(Y)))``."""
    n = ct.n
    prod = ct.n_x * ct.n_y
    nn = n * n
    if prod == 0 or prod >= nn:
        raise UndefinedMeasure("t undefined: P(X)P(Y) is 0 or 1")
    return (n * ct.c11 - prod) * math.sqrt(n) / math.sqrt(prod * (nn - prod))


def t_statistic_set(source: Relation | JointDistribution, event: Event | dict, n: Number | None = None) -> float:
    """``t`` of a full value assignment against mutual independence of all its attributes.

    With a relation the counts come from the data; with a distribution the
    cell probabilities are scaled by ``n``.
    """
    if isinstance(source, Relation):
        if not isinstance(event, Event):
            event = source.event([("" if v else "!") + a for a, v in event.items()])
        n = source.n
        m = source.support(event)
        prod = 1
        for lit in event.literals:
            prod *= source.support(Event.of(lit))
        total = n ** len(event)
        if prod == 0 or prod >= total:
            raise UndefinedMeasure("t undefined: independence product is 0 or 1")
        return (m * total - n * prod) / math.sqrt(n * prod * (total - prod))
    if n is None:
        raise ValueError("n is required with a distribution")
    cells = event if isinstance(event, dict) else {lit.attr.name: lit.value for lit in event.literals}
    p_cell = source.prob(cells)
    prod = 1.0
    for name, value in cells.items():
        prod *= source.prob({name: value})
    if prod <= 0 or prod >= 1:
        raise UndefinedMeasure("t undefined: independence product is 0 or 1")
    return n * (p_cell - prod) / math.sqrt(n * prod * (1 - prod))


def binomial_tail_p(m: int, n: int, p0: float) -> float:
    """Exact ``P(M >= m)`` for ``M ~ Bin(n, p0)``.

    The pmf is evaluated in log space over the whole support and summed from
    the top, so the result never increases with ``m``.
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    if not 0 <= p0 <= 1:
        raise ValueError("p0 must lie in [0, 1]")
    if m == 0 or p0 == 1:
        return 1.0
    if p0 == 0:
        return 0.0
    i = np.arange(n + 1, dtype=float)
    logpmf = (
        gammaln(n + 1.0) - gammaln(i + 1.0) - gammaln(n - i + 1.0)
        + i * math.log(p0) + (n - i) * math.log1p(-p0)
    )
    top = logpmf.max()
    tail = np.cumsum(np.exp(logpmf[:m - 1:-1] - top))[-1]
    return float(min(1.0, math.exp(top) * tail))


def normal_tail_p(t: float) -> float:
    """``1 - Phi(t)`` via the complementary error function."""
    return 0.5 * math.erfc(t / math.sqrt(2.0))


def chebyshev_bound(K: float) -> float:
    """Upper bound ``1/(2K^2)`` on ``P(t >= K)``."""
    if K <= 0:
        raise ValueError("K must be positive")
    return 1.0 / (2.0 * K * K)


def bonferroni_threshold(K: float, tests: int) -> float:
    """Level ``sqrt(m) K`` that keeps the Chebyshev bound at its single-test value divided by ``m``."""
    if tests < 1:
        raise ValueError("number of tests must be positive")
    return math.sqrt(tests) * K


def assess(ct: ContingencyTable, cfg: SignificanceConfig | None = None) -> SignificanceResult:
    """Both tail probabilities of one rule plus the normal-approximation check."""
    cfg = cfg or SignificanceConfig()
    t = t_statistic(ct)
    n = ct.n
    expected = ct.n_x * ct.n_y / n
    valid = expected > cfg.approx_rule_min_expected and n - expected > cfg.approx_rule_min_expected
    p_exact = None
    if ct.is_integral and n <= EXACT_LIMIT:
        p_exact = binomial_tail_p(int(ct.c11), int(n), ct.n_x * ct.n_y / (n * n))
    return SignificanceResult(t, p_exact, normal_tail_p(t), valid, expected)


def _check_marginals(p_x: float, p_y: float) -> None:
    if not (0 < p_x < 1 and 0 < p_y < 1):
        raise ValueError("marginals must lie strictly inside (0, 1)")


def min_frequency_for_significance(p_x: float, p_y: float, n: int, K: float) -> float:
    """Smallest ``P(X,Y)`` with ``t >= K`` at fixed marginals."""
    _check_marginals(p_x, p_y)
    if n < 1 or K < 0:
        raise ValueError("need n >= 1 and K >= 0")
    e = p_x * p_y
    return e + K * math.sqrt(e * (1 - e)) / math.sqrt(n)


def min_confidence_for_significance(p_x: float, p_y: float, n: int, K: float) -> float:
    """Smallest ``P(Y|X)`` with ``t >= K`` at fixed marginals."""
    return min_frequency_for_significance(p_x, p_y, n, K) / p_x


def t_hat_frcf(fr: float, cf: float, p_y: float) -> float:
    """``t / sqrt(n)`` as a function of frequency and confidence for fixed ``P(Y)``."""
    denom = p_y * (cf - fr * p_y)
    if not (0 < p_y and fr >= 0 and cf > 0 and denom > 0):
        raise UndefinedMeasure("t-hat undefined for these frequency/confidence values")
    return math.sqrt(fr) * (cf - p_y) / math.sqrt(denom)


def t_hat_frgamma(fr: float, gamma: float) -> float:
    """``t / sqrt(n)`` as a function of frequency and degree of dependence."""
    if fr < 0 or gamma - fr <= 0:
        raise UndefinedMeasure("t-hat undefined for these frequency/gamma values")
    return math.sqrt(fr) * (gamma - 1) / math.sqrt(gamma - fr)


def theorem1_frequency_at_K(gamma: float, n: int, K: float) -> float:
    """Frequency at which a rule with degree of dependence ``gamma`` has ``t = K``:
    ``K^2 gamma / (n (gamma - 1)^2 + K^2)``.
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    if n < 1 or K < 0:
        raise ValueError("need n >= 1 and K >= 0")
    k2 = K * K
    return k2 * gamma / (n * (gamma - 1) ** 2 + k2)


def safe_min_frequency(p_min: float, n: int, K: float) -> float:
    """Global frequency floor below which no single-consequent rule reaches ``t >= K``.

    Uses ``gamma <= 1/p_min``; equals ``K^2 p / (n (1-p)^2 + K^2 p^2)`` with ``p = p_min``.
    Stated for ``K >= 2`` but the bound holds for any ``K > 0``.
    """
    if not 0 < p_min < 1:
        raise ValueError("p_min must lie strictly inside (0, 1)")
    return theorem1_frequency_at_K(1.0 / p_min, n, K)


def morishita_chi2_bound(ct: ContingencyTable) -> float:
    """Upper bound on ``chi2(X -> C)`` over every specialization ``X`` of ``Z``.

    ``ct`` tabulates ``Z`` against ``C``.
    """
    n = ct.n
    n_c = ct.n_y
    n_nc = n - n_c
    if n_c == 0 or n_nc == 0:
        raise ValueError("consequent marginal is degenerate")
    if ct.c11 >= n or ct.c10 >= n:
        raise ValueError("P(Z,C) and P(Z,!C) must be below 1")
    first = n * ct.c11 * n_nc / ((n - ct.c11) * n_c)
    second = n * ct.c10 * n_c / ((n - ct.c10) * n_nc)
    return max(first, second)
