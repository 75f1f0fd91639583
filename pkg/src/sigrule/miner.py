"""Frequent-set enumeration and rule ranking by ``t``.

Sets are enumerated depth-first over a prefix tree of literals ordered by
attribute index.  The frequency floor is either given explicitly or derived
from the smallest admitted literal probability so that no rule with
``t >= K`` can fall below it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .measures import ContingencyTable, MeasureReport, UndefinedMeasure, interest_rho_relation, measure_report
from .relation import Event, Literal, Relation
from .significance import SignificanceResult, assess, bonferroni_threshold, safe_min_frequency

log = logging.getLogger(__name__)

# slack on floor comparisons so rounding in the floor never drops a set sitting on it
_FLOOR_SLACK = 1e-12


@dataclass(frozen=True)
class MineConfig:
    K: float = 2.0
    max_len: int | None = None
    min_fr: float | None = None
    consequent: Literal | None = None
    literals: str = "positive"
    bonferroni: bool = False
    bonferroni_tests: int | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if self.max_len is not None and self.max_len < 1:
            raise ValueError("max_len must be positive")
        if self.min_fr is not None and not 0 < self.min_fr <= 1:
            raise ValueError("explicit min_fr must lie in (0, 1]")
        if self.literals not in ("positive", "all"):
            raise ValueError("literals must be 'positive' or 'all'")
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass
class Rule:
    antecedent: Event
    consequent: Event
    ct: ContingencyTable
    scores: MeasureReport
    significance: SignificanceResult | None = None

    @property
    def t(self) -> float | None:
        return self.scores.t

    @property
    def sort_key(self):
        return (-self.t, len(self.antecedent), self.antecedent.sort_key, self.consequent.sort_key)

    def __str__(self) -> str:
        return f"{self.antecedent}=>{self.consequent}"


@dataclass
class FrequentSets:
    supports: dict[Event, int]
    floor: float
    p_min: float | None
    n: int
    warning: str | None = None

    def __len__(self) -> int:
        return len(self.supports)


@dataclass
class MiningResult:
    sets: FrequentSets
    rules: list[Rule]
    undefined: int
    effective_K: float
    ranked: list[Rule] = field(default_factory=list)


def score_rule(rel: Relation, antecedent: Event, consequent: Event, ct: ContingencyTable | None = None) -> Rule:
    """Score one rule against the relation; undefined measures are left as ``None``."""
    if not len(antecedent) or not len(consequent):
        raise ValueError("antecedent and consequent must be nonempty")
    if ct is None:
        ct = ContingencyTable.from_relation(rel, antecedent, consequent)
    try:
        rho = interest_rho_relation(rel, antecedent | consequent)
    except UndefinedMeasure:
        rho = None
    scores = measure_report(ct, rho=rho)
    sig = assess(ct) if scores.t is not None else None
    return Rule(antecedent, consequent, ct, scores, sig)


def admitted_literals(rel: Relation, cfg: MineConfig) -> list[Literal]:
    values = (True,) if cfg.literals == "positive" else (True, False)
    lits = [Literal(a, v) for a in rel.attributes for v in values]
    if cfg.consequent is not None and cfg.consequent not in lits:
        lits.append(cfg.consequent)
    lits = [lit for lit in lits if rel.literal_mask(lit)]
    return sorted(lits, key=lambda lit: lit.sort_key)


def auto_floor(rel: Relation, lits: list[Literal], K: float) -> tuple[float, float | None]:
    """Frequency floor from the smallest admitted literal probability."""
    if not lits:
        return 1.0, None
    p_min = max(min(rel.literal_mask(lit).bit_count() for lit in lits) / rel.n, 1.0 / rel.n)
    if p_min >= 1.0:
        return 1.0, p_min
    return safe_min_frequency(p_min, rel.n, K), p_min


def mine_frequent_sets(rel: Relation, cfg: MineConfig) -> FrequentSets:
    lits = admitted_literals(rel, cfg)
    if cfg.min_fr is None:
        floor, p_min = auto_floor(rel, lits, cfg.K)
    else:
        floor, p_min = cfg.min_fr, None
    if floor > 1:
        log.warning("frequency floor %.6g exceeds 1; no set can qualify", floor)
        return FrequentSets({}, floor, p_min, rel.n, warning="frequency floor exceeds 1")

    max_len = min(cfg.max_len or rel.k, rel.k)
    min_count = floor * rel.n * (1 - _FLOOR_SLACK)
    masks = [rel.literal_mask(lit) for lit in lits]
    # index of the first literal on a later attribute, for each position
    nxt = [len(lits)] * len(lits)
    for j in range(len(lits) - 1, -1, -1):
        if j + 1 < len(lits) and lits[j + 1].attr.index != lits[j].attr.index:
            nxt[j] = j + 1
        elif j + 1 < len(lits):
            nxt[j] = nxt[j + 1]

    def expand(prefix: tuple[Literal, ...], mask: int, start: int, out: list) -> None:
        for j in range(start, len(lits)):
            m = mask & masks[j]
            s = m.bit_count()
            if s < min_count:
                continue
            items = prefix + (lits[j],)
            out.append((Event(frozenset(items)), s))
            if len(items) < max_len:
                expand(items, m, nxt[j], out)

    def branch(j: int) -> list:
        out: list = []
        s = masks[j].bit_count()
        if s >= min_count:
            out.append((Event.of(lits[j]), s))
            if max_len > 1:
                expand((lits[j],), masks[j], nxt[j], out)
        return out

    if cfg.threads > 1 and len(lits) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(branch, range(len(lits))))
    else:
        parts = [branch(j) for j in range(len(lits))]
    found = [item for part in parts for item in part]
    found.sort(key=lambda es: (len(es[0]), es[0].sort_key))
    return FrequentSets(dict(found), floor, p_min, rel.n)


def generate_rules(sets: FrequentSets, rel: Relation, cfg: MineConfig) -> tuple[list[Rule], int]:
    """Every single-literal-consequent rule of every frequent set.

    Returns the scored rules and the number skipped because ``t`` is undefined.
    """
    supports = sets.supports
    rules: list[Rule] = []
    undefined = 0
    for itemset, s in supports.items():
        if len(itemset) < 2:
            continue
        for lit in itemset.ordered():
            if cfg.consequent is not None and lit != cfg.consequent:
                continue
            cons = Event.of(lit)
            ante = itemset - cons
            n_x = supports.get(ante)
            n_y = supports.get(cons)
            if n_x is None:
                n_x = rel.support(ante)
            if n_y is None:
                n_y = rel.support(cons)
            ct = ContingencyTable.from_counts(rel.n, n_x, n_y, s)
            rule = score_rule(rel, ante, cons, ct)
            if rule.t is None:
                undefined += 1
                continue
            rules.append(rule)
    return rules, undefined


def effective_level(cfg: MineConfig, tested: int) -> float:
    if not cfg.bonferroni:
        return cfg.K
    m = cfg.bonferroni_tests if cfg.bonferroni_tests is not None else max(tested, 1)
    return bonferroni_threshold(cfg.K, m)


def rank_significant(rules: list[Rule], cfg: MineConfig, tested: int | None = None) -> list[Rule]:
    """Rules with ``t`` at or above the (possibly Bonferroni-adjusted) level, best first."""
    level = effective_level(cfg, len(rules) if tested is None else tested)
    keep = [r for r in rules if r.t is not None and r.t >= level]
    return sorted(keep, key=lambda r: r.sort_key)


def mine(rel: Relation, cfg: MineConfig) -> MiningResult:
    sets = mine_frequent_sets(rel, cfg)
    rules, undefined = generate_rules(sets, rel, cfg)
    rules.sort(key=lambda r: r.sort_key)
    level = effective_level(cfg, len(rules))
    ranked = rank_significant(rules, cfg, len(rules))
    return MiningResult(sets, rules, undefined, level, ranked)

