"""Post-processing checks that compare a rule with its generalizations.

All conditions on confidences and on the superiority inequality are
evaluated in exact rational arithmetic over the table counts, so a check and
the direct comparison of ``t`` values it stands for can never disagree through
rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .measures import ContingencyTable, MeasureReport
from .miner import Rule
from .relation import EMPTY, Event, Relation


class NotApplicable(ValueError):
    """The generalization is not positively dependent, so the ratio test has no meaning."""


@dataclass(frozen=True)
class Status:
    redundant: bool
    witnesses: tuple = ()
    applicable: bool = True

    @property
    def label(self) -> str:
        if not self.applicable:
            return "n/a"
        return "redundant" if self.redundant else "minimal"


@dataclass(frozen=True)
class RedundancyVerdict:
    rule: Rule
    classic: Status
    closed: Status
    productive: Status
    improvement: Status
    superiority: Status
    imp: float

    def labels(self) -> dict[str, str]:
        return {
            "classic": self.classic.label,
            "closed": self.closed.label,
            "productive": "productive" if not self.productive.redundant else "non-productive",
            "improvement": self.improvement.label,
            "superiority": self.superiority.label,
        }


def generalizations(event: Event, include_empty: bool = False) -> list[Event]:
    """Every strict sub-event, smallest first."""
    lits = event.ordered()
    sizes = range(0 if include_empty else 1, len(lits))
    return [Event(frozenset(c)) for size in sizes for c in combinations(lits, size)]


def _frac(x) -> Fraction:
    return Fraction(x) if not isinstance(x, Fraction) else x


def _cf(ct: ContingencyTable) -> Fraction:
    return _frac(ct.c11) / _frac(ct.n_x)


def check_classic_redundancy(rule: Rule, rel: Relation) -> Status:
    """Redundant when some ``Z`` strictly inside ``X`` has the same joint count with ``Y``."""
    joint = rel.support(rule.antecedent | rule.consequent)
    wit = tuple(
        z for z in generalizations(rule.antecedent)
        if rel.support(z | rule.consequent) == joint
    )
    return Status(bool(wit), wit)


def closed_candidates(rule: Rule, rel: Relation) -> list[Rule]:
    """More general rules ``X' -> Y'`` with ``X'`` inside ``X`` and ``Y'`` a superset of ``Y``.

    ``Y'`` may absorb literals of ``X`` that ``X'`` drops.
    """
    out = []
    for xp in generalizations(rule.antecedent):
        rest = (rule.antecedent - xp).ordered()
        for size in range(len(rest) + 1):
            for extra in combinations(rest, size):
                yp = rule.consequent | Event(frozenset(extra))
                ct = ContingencyTable.from_relation(rel, xp, yp)
                out.append(Rule(xp, yp, ct, MeasureReport()))
    return out


def check_closed_redundancy(rule: Rule, candidates: Iterable[Rule]) -> Status:
    """Redundant when a candidate has equal antecedent count and equal joint count."""
    wit = []
    for cand in candidates:
        if not (cand.antecedent.literals < rule.antecedent.literals):
            continue
        if not rule.consequent.issubset(cand.consequent):
            continue
        if cand.ct.n != rule.ct.n:
            continue
        if cand.ct.c11 == rule.ct.c11 and cand.ct.n_x == rule.ct.n_x:
            wit.append((cand.antecedent, cand.consequent))
    return Status(bool(wit), tuple(wit))


def _general_tables(rule: Rule, rel: Relation, include_empty: bool) -> list[tuple[Event, ContingencyTable]]:
    return [
        (z, ContingencyTable.from_relation(rel, z, rule.consequent))
        for z in generalizations(rule.antecedent, include_empty=include_empty)
    ]


def check_productive(rule: Rule, rel: Relation) -> Status:
    """Productive when the confidence beats every generalization, the empty antecedent included."""
    cf = _cf(rule.ct)
    wit = tuple(z for z, ct in _general_tables(rule, rel, True) if _cf(ct) >= cf)
    return Status(bool(wit), wit)


def _improvement_exact(rule: Rule, rel: Relation) -> tuple[Fraction, Event]:
    best, arg = None, EMPTY
    for z, ct in _general_tables(rule, rel, True):
        c = _cf(ct)
        if best is None or c > best:
            best, arg = c, z
    return _cf(rule.ct) - best, arg


def improvement(rule: Rule, rel: Relation) -> float:
    """``cf(X->Y)`` minus the best confidence among all strict generalizations."""
    return float(_improvement_exact(rule, rel)[0])


def _ratio_parts(ct_x: ContingencyTable, ct_z: ContingencyTable):
    if ct_x.n != ct_z.n or ct_x.n_y != ct_z.n_y:
        raise ValueError("tables must share n and the consequent")
    if ct_x.n_x == 0 or ct_z.n_x == 0 or ct_x.n_x > ct_z.n_x:
        raise NotApplicable("need 0 < P(X) <= P(Z)")
    n = _frac(ct_x.n)
    p_y = _frac(ct_x.n_y) / n
    if not 0 < p_y < 1:
        raise NotApplicable("consequent marginal is degenerate")
    cf_x, cf_z = _cf(ct_x), _cf(ct_z)
    if cf_z <= p_y:
        raise NotApplicable("generalization is not positively dependent")
    p_x = _frac(ct_x.n_x) / n
    p_z = _frac(ct_z.n_x) / n
    q = p_x / p_z
    ratio = (cf_x - p_y) / (cf_z - p_y)
    return ratio, q, p_x, p_z, p_y, cf_z


def superiority_condition(ct_x: ContingencyTable, ct_z: ContingencyTable) -> bool:
    """True iff ``t(X->Y) > t(Z->Y)``, decided by the confidence-ratio inequality.

    ``ct_x`` and ``ct_z`` tabulate ``X = Z & Q`` and ``Z`` against the same ``Y``.
    """
    ratio, q, p_x, p_z, p_y, _ = _ratio_parts(ct_x, ct_z)
    if ratio <= 0:
        return False
    # ratio > sqrt(1 - P(X)P(Y)) / sqrt(P(Q|Z) (1 - P(Z)P(Y))), squared
    return ratio * ratio > (1 - p_x * p_y) / (q * (1 - p_z * p_y))


def corollary_prune(ct_x: ContingencyTable, ct_z: ContingencyTable) -> bool:
    """True when ``t(X->Y) <= t(Z->Y)`` is guaranteed: ratio at most ``1/sqrt(P(Q|Z))``."""
    ratio, q, *_ = _ratio_parts(ct_x, ct_z)
    if ratio <= 0:
        return True
    return ratio * ratio * q <= 1


def corollary_imp_threshold(ct_x: ContingencyTable, ct_z: ContingencyTable) -> float:
    """Largest ``cf(X->Y) - cf(Z->Y)`` still covered by :func:`corollary_prune`.

    ``(P(Y|Z) - P(Y)) (1 - sqrt(P(Q|Z))) / sqrt(P(Q|Z))``.
    """
    _, q, _, _, p_y, cf_z = _ratio_parts(ct_x, ct_z)
    root = float(q) ** 0.5
    return float(cf_z - p_y) * (1 - root) / root


def check_superiority(rule: Rule, rel: Relation) -> Status:
    """Redundant when some applicable nonempty generalization is at least as significant."""
    wit = []
    for z, ct_z in _general_tables(rule, rel, False):
        try:
            if not superiority_condition(rule.ct, ct_z):
                wit.append(z)
        except NotApplicable:
            continue
    return Status(bool(wit), tuple(wit))


def assess_redundancy(
    rule: Rule,
    rel: Relation,
    min_imp: float = 0.0,
    candidates: Iterable[Rule] | None = None,
) -> RedundancyVerdict:
    """Run every check on one rule.

    The improvement status requires ``imp > 0`` and ``imp >= min_imp``.
    """
    if candidates is None:
        candidates = closed_candidates(rule, rel)
    imp, arg = _improvement_exact(rule, rel)
    imp_ok = imp > 0 and imp >= _frac(min_imp)
    return RedundancyVerdict(
        rule=rule,
        classic=check_classic_redundancy(rule, rel),
        closed=check_closed_redundancy(rule, candidates),
        productive=check_productive(rule, rel),
        improvement=Status(not imp_ok, () if imp_ok else (arg,)),
        superiority=check_superiority(rule, rel),
        imp=float(imp),
    )
