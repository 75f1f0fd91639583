"""Interestingness measures for rules and attribute sets.

Every rule measure is a pure function of a 2x2 :class:`ContingencyTable`.
Integer tables are evaluated through integer cross products where possible
(``c11*c00 - c10*c01`` and friends), so identities such as ``phi**2 * n == chi2``
hold to rounding of the final division only.

Logarithms are base 2. A measure that is undefined for the given table raises
:class:`UndefinedMeasure`; :func:`measure_report` turns that into ``None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .relation import Event, Relation

Number = int | float


class UndefinedMeasure(ArithmeticError):
    """The measure has no value for this table (a marginal is degenerate)."""


@dataclass(frozen=True)
class ContingencyTable:
    """Joint counts of ``(X, Y)``, ``(X, !Y)``, ``(!X, Y)`` and ``(!X, !Y)``.

    Counts are integers when taken from data; the analytic constructions use
    real-valued counts ``n * P(cell)``.
    """

    c11: Number
    c10: Number
    c01: Number
    c00: Number

    def __post_init__(self) -> None:
        for name in ("c11", "c10", "c01", "c00"):
            if getattr(self, name) < 0:
                raise ValueError(f"negative count {name}={getattr(self, name)}")
        if self.n <= 0:
            raise ValueError("contingency table is empty")

    @classmethod
    def from_counts(cls, n: int, n_x: int, n_y: int, n_xy: int) -> ContingencyTable:
        return cls(n_xy, n_x - n_xy, n_y - n_xy, n - n_x - n_y + n_xy)

    @classmethod
    def from_relation(cls, rel: Relation, x: Event, y: Event) -> ContingencyTable:
        if not x.disjoint(y):
            raise ValueError("antecedent and consequent share an attribute")
        return cls.from_counts(rel.n, rel.support(x), rel.support(y), rel.support(x | y))

    @classmethod
    def from_probabilities(cls, px: float, py: float, pxy: float, n: Number = 1) -> ContingencyTable:
        """Real-valued table with cells ``n * P(cell)``; tiny negative rounding is clipped."""
        cells = [pxy, px - pxy, py - pxy, 1.0 - px - py + pxy]
        out = []
        for c in cells:
            if c < 0:
                if c < -1e-12:
                    raise ValueError(f"probabilities do not define a table: {cells}")
                c = 0.0
            out.append(n * c)
        return cls(*out)

    @property
    def n(self) -> Number:
        return self.c11 + self.c10 + self.c01 + self.c00

    @property
    def n_x(self) -> Number:
        return self.c11 + self.c10

    @property
    def n_y(self) -> Number:
        return self.c11 + self.c01

    @property
    def p_x(self) -> float:
        return self.n_x / self.n

    @property
    def p_y(self) -> float:
        return self.n_y / self.n

    @property
    def p_xy(self) -> float:
        return self.c11 / self.n

    @property
    def is_integral(self) -> bool:
        return all(isinstance(c, (int, np.integer)) for c in (self.c11, self.c10, self.c01, self.c00))

    def negate_x(self) -> ContingencyTable:
        return ContingencyTable(self.c01, self.c00, self.c11, self.c10)

    def negate_y(self) -> ContingencyTable:
        return ContingencyTable(self.c10, self.c11, self.c00, self.c01)

    def transpose(self) -> ContingencyTable:
        return ContingencyTable(self.c11, self.c01, self.c10, self.c00)

    def as_tuple(self) -> tuple[Number, Number, Number, Number]:
        return (self.c11, self.c10, self.c01, self.c00)


def _cross(ct: ContingencyTable) -> Number:
    # n * c11 - n_x * n_y, i.e. n**2 * d
    return ct.c11 * ct.c00 - ct.c10 * ct.c01


def frequency(ct: ContingencyTable) -> float:
    return ct.c11 / ct.n


def confidence(ct: ContingencyTable) -> float:
    if ct.n_x == 0:
        raise UndefinedMeasure("confidence undefined: P(X)=0")
    return ct.c11 / ct.n_x


def dependence_value(ct: ContingencyTable) -> float:
    """``d = P(X,Y) - P(X)P(Y)``."""
    return _cross(ct) / (ct.n * ct.n)


def relative_difference(ct: ContingencyTable) -> float:
    """``r = d / (P(X)P(Y))``."""
    prod = ct.n_x * ct.n_y
    if prod == 0:
        raise UndefinedMeasure("relative difference undefined: P(X)P(Y)=0")
    return _cross(ct) / prod


def gamma(ct: ContingencyTable) -> float:
    """Degree of dependence ``P(X,Y) / (P(X)P(Y))``."""
    prod = ct.n_x * ct.n_y
    if prod == 0:
        raise UndefinedMeasure("gamma undefined: P(X)P(Y)=0")
    return ct.c11 * ct.n / prod


def _marginal_product(ct: ContingencyTable) -> Number:
    prod = ct.n_x * (ct.c01 + ct.c00) * ct.n_y * (ct.c10 + ct.c00)
    if prod == 0:
        raise UndefinedMeasure("degenerate marginal: P(X) or P(Y) is 0 or 1")
    return prod


def chi2_rule(ct: ContingencyTable) -> float:
    """Two-way chi-square ``n d^2 / (P(X)P(!X)P(Y)P(!Y))``."""
    prod = _marginal_product(ct)
    cross = _cross(ct)
    return ct.n * (cross * cross) / prod


def phi(ct: ContingencyTable) -> float:
    """Pearson correlation of the two indicator variables."""
    prod = _marginal_product(ct)
    return _cross(ct) / math.sqrt(prod)


def _info_term(joint: Number, cond_total: Number, target_total: Number, n: Number) -> float:
    # P(X,C) * log2(P(C|X) / P(C)) with 0 log 0 = 0
    if joint == 0:
        return 0.0
    return (joint / n) * math.log2(joint * n / (cond_total * target_total))


def j_measure(ct: ContingencyTable) -> float:
    """J-measure of the rule ``X -> C`` where the table's second axis is ``C``."""
    if ct.n_x == 0:
        raise UndefinedMeasure("J undefined: P(X)=0")
    n_c = ct.n_y
    n_nc = ct.c10 + ct.c00
    if n_c == 0 or n_nc == 0:
        raise UndefinedMeasure("J undefined: degenerate consequent")
    pos = _info_term(ct.c11, ct.n_x, n_c, ct.n)
    neg = _info_term(ct.c10, ct.n_x, n_nc, ct.n)
    return max(pos + neg, 0.0)


def mutual_information_rule(ct: ContingencyTable) -> float:
    """``MI(X, C) = J(C|X) + J(C|!X)`` in bits."""
    return j_measure(ct) + j_measure(ct.negate_x())


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Explicit probability table over binary attributes.

    Cell ``i`` holds ``P(A_0=b_0, ..., A_{l-1}=b_{l-1})`` where ``b_j`` is bit ``j``
    of ``i``.
    """

    attrs: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        attrs = tuple(self.attrs)
        probs = np.asarray(self.probs, dtype=float).copy()
        probs.setflags(write=False)
        object.__setattr__(self, "attrs", attrs)
        object.__setattr__(self, "probs", probs)
        if len(attrs) > 16:
            raise ValueError("at most 16 attributes are supported")
        if len(set(attrs)) != len(attrs):
            raise ValueError("duplicate attribute names")
        if probs.shape != (1 << len(attrs),):
            raise ValueError(f"expected {1 << len(attrs)} cells, got {probs.shape}")
        if (probs < 0).any():
            raise ValueError("negative cell probability")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"cells sum to {probs.sum()!r}, not 1")

    @classmethod
    def product(cls, marginals: Sequence[float], attrs: Sequence[str] | None = None) -> JointDistribution:
        l = len(marginals)
        attrs = tuple(attrs) if attrs is not None else tuple(f"A{i + 1}" for i in range(l))
        probs = np.ones(1 << l)
        idx = np.arange(1 << l)
        for j, p in enumerate(marginals):
            bit = (idx >> j) & 1
            probs *= np.where(bit == 1, p, 1.0 - p)
        return cls(attrs, probs / probs.sum())

    @classmethod
    def from_relation(cls, rel: Relation, attrs: Sequence[str] | None = None) -> JointDistribution:
        names = tuple(attrs) if attrs is not None else rel.names
        if len(names) > 16:
            raise ValueError("at most 16 attributes are supported")
        mat = rel.to_matrix()[:, [rel.attribute(a).index for a in names]].astype(np.int64)
        codes = (mat << np.arange(len(names))).sum(axis=1)
        counts = np.bincount(codes, minlength=1 << len(names))
        return cls(names, counts / rel.n)

    @property
    def size(self) -> int:
        return len(self.attrs)

    def index_of(self, name: str) -> int:
        return self.attrs.index(name)

    def p1(self) -> np.ndarray:
        """Single-attribute marginals ``P(A_j = 1)``."""
        idx = np.arange(len(self.probs))
        return np.array([self.probs[((idx >> j) & 1) == 1].sum() for j in range(self.size)])

    def marginal(self, names: Sequence[str]) -> JointDistribution:
        pos = [self.index_of(a) for a in names]
        idx = np.arange(len(self.probs))
        sub = np.zeros(len(idx), dtype=np.int64)
        for new_j, old_j in enumerate(pos):
            sub |= ((idx >> old_j) & 1) << new_j
        probs = np.bincount(sub, weights=self.probs, minlength=1 << len(pos))
        return JointDistribution(tuple(names), probs)

    def prob(self, assignment: Mapping[str, bool] | Event) -> float:
        """Probability of a (partial) assignment."""
        assignment = _as_mapping(assignment)
        idx = np.arange(len(self.probs))
        keep = np.ones(len(idx), dtype=bool)
        for name, value in assignment.items():
            j = self.index_of(name)
            keep &= ((idx >> j) & 1) == int(bool(value))
        return float(self.probs[keep].sum())

    def table(self, x: Mapping[str, bool] | Event, y: Mapping[str, bool] | Event, n: Number = 1) -> ContingencyTable:
        """Real-valued 2x2 table of two events under this distribution."""
        x, y = _as_mapping(x), _as_mapping(y)
        if set(x) & set(y):
            raise ValueError("events share an attribute")
        return ContingencyTable.from_probabilities(self.prob(x), self.prob(y), self.prob({**x, **y}), n)


def _as_mapping(assignment) -> dict[str, bool]:
    if isinstance(assignment, Event):
        return {lit.attr.name: lit.value for lit in assignment.literals}
    return dict(assignment)


def chi2_set(dist: JointDistribution, n: Number) -> float:
    """Chi-square of the full joint against the product of its marginals."""
    p1 = dist.p1()
    if ((p1 <= 0) | (p1 >= 1)).any():
        raise UndefinedMeasure("chi2 undefined: degenerate single-attribute marginal")
    idx = np.arange(len(dist.probs))
    expected = np.ones(len(idx))
    for j, p in enumerate(p1):
        expected *= np.where(((idx >> j) & 1) == 1, p, 1.0 - p)
    return float(n * np.sum((dist.probs - expected) ** 2 / expected))


def interest_rho(dist: JointDistribution, assignment: Mapping[str, bool] | Event) -> float:
    """``P(A_1..A_l) / prod P(A_i)`` for the given value assignment."""
    assignment = _as_mapping(assignment)
    denom = 1.0
    for name, value in assignment.items():
        p = dist.prob({name: value})
        if p == 0:
            raise UndefinedMeasure(f"rho undefined: P({name}={int(value)})=0")
        denom *= p
    return dist.prob(assignment) / denom


def interest_rho_relation(rel: Relation, event: Event) -> float:
    """Same as :func:`interest_rho` with probabilities read from data."""
    denom = 1
    for lit in event.literals:
        s = rel.support(Event.of(lit))
        if s == 0:
            raise UndefinedMeasure(f"rho undefined: P({lit})=0")
        denom *= s
    return rel.support(event) * rel.n ** (len(event) - 1) / denom


def brin_cell_frequency(dist: JointDistribution, p: float) -> float:
    """Largest ``s`` such that at least a ``p`` share of the cells reach ``s``."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    cells = np.sort(dist.probs)[::-1]
    rank = max(1, math.ceil(Fraction(p) * len(cells)))
    return float(cells[rank - 1])


def brin_max_set_size(p: float, min_fr: float) -> int:
    """Largest set size that can pass the cell-frequency threshold: ``floor(-log2(p*min_fr))``."""
    if not (0 < p <= 1 and 0 < min_fr <= 1):
        raise ValueError("p and min_fr must lie in (0, 1]")
    return math.floor(-math.log2(p * min_fr))


@dataclass(frozen=True)
class MeasureReport:
    fr: float | None = None
    cf: float | None = None
    d: float | None = None
    r: float | None = None
    gamma: float | None = None
    t: float | None = None
    chi2: float | None = None
    phi: float | None = None
    j: float | None = None
    mi: float | None = None
    rho: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _maybe(fn, *args):
    try:
        return fn(*args)
    except UndefinedMeasure:
        return None


def measure_report(ct: ContingencyTable, rho: float | None = None) -> MeasureReport:
    from .significance import t_statistic

    return MeasureReport(
        fr=frequency(ct),
        cf=_maybe(confidence, ct),
        d=dependence_value(ct),
        r=_maybe(relative_difference, ct),
        gamma=_maybe(gamma, ct),
        t=_maybe(t_statistic, ct),
        chi2=_maybe(chi2_rule, ct),
        phi=_maybe(phi, ct),
        j=_maybe(j_measure, ct),
        mi=_maybe(mutual_information_rule, ct),
        rho=rho,
    )
