import math
from itertools import combinations

import numpy as np
import pytest

from sigrule.measures import ContingencyTable
from sigrule.miner import (
    MineConfig,
    admitted_literals,
    auto_floor,
    generate_rules,
    mine,
    mine_frequent_sets,
    rank_significant,
    score_rule,
)
from sigrule.relation import Event, Literal, Relation, load_transactions
from sigrule.significance import bonferroni_threshold, safe_min_frequency


def rand_rel(seed, n, k, density=0.5):
    rng = np.random.default_rng(seed)
    latent = rng.random(n) < 0.5
    cols = []
    for j in range(k):
        base = rng.random(n) < density
        cols.append(np.where(rng.random(n) < 0.4, latent, base) if j % 2 else base)
    return Relation.from_matrix(np.array(cols, dtype=np.uint8).T)


def exhaustive_sets(rel, floor, literals="positive", max_len=None):
    values = (True,) if literals == "positive" else (True, False)
    out = {}
    for size in range(1, (max_len or rel.k) + 1):
        for attrs in combinations(rel.attributes, size):
            for vals in np.ndindex(*(len(values),) * size):
                ev = Event(frozenset(Literal(a, values[v]) for a, v in zip(attrs, vals)))
                s = rel.support(ev)
                if s and s >= floor * rel.n * (1 - 1e-12):
                    out[ev] = s
    return out


def exhaustive_rules(rel, K, literals="positive"):
    values = (True,) if literals == "positive" else (True, False)
    found = {}
    for size in range(2, rel.k + 1):
        for attrs in combinations(rel.attributes, size):
            for vals in np.ndindex(*(len(values),) * size):
                lits = [Literal(a, values[v]) for a, v in zip(attrs, vals)]
                for c in lits:
                    x = Event(frozenset(l for l in lits if l != c))
                    y = Event.of(c)
                    n, nx, ny, s = rel.n, rel.support(x), rel.support(y), rel.support(x | y)
                    if nx * ny in (0,) or nx * ny >= n * n:
                        continue
                    t = (n * s - nx * ny) * math.sqrt(n) / math.sqrt(nx * ny * (n * n - nx * ny))
                    if t >= K:
                        found[(x, y)] = t
    return found


def test_identical_columns():
    col = np.array([1, 0, 1, 1, 0, 1], dtype=np.uint8)
    rel = Relation.from_matrix(np.stack([col] * 4, axis=1))
    sets = mine_frequent_sets(rel, MineConfig(min_fr=0.5, max_len=3))
    assert len(sets) == 4 + 6 + 4
    assert set(sets.supports.values()) == {4}


def test_explicit_floor_matches_enumeration():
    rel = rand_rel(1, 200, 10)
    sets = mine_frequent_sets(rel, MineConfig(min_fr=0.2))
    assert sets.supports == exhaustive_sets(rel, 0.2)


def test_all_literals_sets_match_enumeration():
    rel = rand_rel(2, 80, 5)
    sets = mine_frequent_sets(rel, MineConfig(min_fr=0.1, literals="all", max_len=3))
    assert sets.supports == exhaustive_sets(rel, 0.1, "all", 3)


def test_sub_events_meet_floor():
    rel = rand_rel(3, 150, 8)
    sets = mine_frequent_sets(rel, MineConfig())
    for ev in sets.supports:
        for lit in ev.literals:
            sub = ev - Event.of(lit)
            if len(sub):
                assert sub in sets.supports


def test_auto_floor():
    rel = rand_rel(4, 300, 6)
    lits = admitted_literals(rel, MineConfig())
    floor, p_min = auto_floor(rel, lits, 2.0)
    assert p_min == min(rel.support(Event.of(l)) for l in lits) / rel.n
    assert floor == safe_min_frequency(p_min, rel.n, 2.0)


def test_zero_probability_literal_excluded():
    rel = Relation.from_matrix(np.array([[1, 0], [1, 0], [0, 0]], dtype=np.uint8))
    lits = admitted_literals(rel, MineConfig(literals="all"))
    assert Literal(rel.attributes[1], True) not in lits
    assert Literal(rel.attributes[1], False) in lits


def test_floor_above_one_gives_empty_result():
    rel = Relation.from_matrix(np.array([[1, 1], [0, 0], [1, 1], [0, 0]], dtype=np.uint8))
    res = mine(rel, MineConfig(K=3))
    assert res.sets.floor > 1 and res.sets.warning and not res.rules


def test_completeness_twelve_attributes():
    rel = rand_rel(5, 300, 12)
    auto = mine(rel, MineConfig(K=2.0))
    full = mine(rel, MineConfig(K=2.0, min_fr=1 / rel.n))
    key = lambda r: (r.antecedent, r.consequent, r.t)
    assert {key(r) for r in auto.ranked} == {key(r) for r in full.ranked}
    assert auto.sets.floor > 1 / rel.n


def test_completeness_all_literals():
    rel = rand_rel(6, 120, 5)
    res = mine(rel, MineConfig(K=2.0, literals="all"))
    got = {(r.antecedent, r.consequent): r.t for r in res.ranked}
    want = exhaustive_rules(rel, 2.0, "all")
    assert got.keys() == want.keys()
    for k, t in want.items():
        assert got[k] == pytest.approx(t, rel=1e-12)
    assert any(not lit.value for r in res.ranked for lit in r.antecedent | r.consequent)


def test_generate_rules_both_directions():
    rel = load_transactions("a b\na b\na\nb\nc\n")
    sets = mine_frequent_sets(rel, MineConfig(min_fr=0.4, max_len=2))
    rules, undefined = generate_rules(sets, rel, MineConfig())
    assert {str(r) for r in rules} == {"a=>b", "b=>a"}
    assert undefined == 0


def test_undefined_rules_counted():
    rel = Relation.from_matrix(np.ones((3, 2), dtype=np.uint8))  # P(X)P(Y) = 1 for both rules
    res = mine(rel, MineConfig(min_fr=0.1))
    assert res.undefined == 2 and not res.rules


def test_fixed_consequent():
    rel = rand_rel(7, 200, 6)
    cons = rel.literal("A3")
    res = mine(rel, MineConfig(consequent=cons, min_fr=0.05))
    assert res.rules and all(r.consequent == Event.of(cons) for r in res.rules)
    neg = mine(rel, MineConfig(consequent=rel.literal("!A3"), min_fr=0.05))
    assert neg.rules and all(r.consequent == rel.event("!A3") for r in neg.rules)


def test_scores_match_direct_scoring():
    rel = rand_rel(8, 150, 5)
    for r in mine(rel, MineConfig(min_fr=0.05)).rules:
        direct = score_rule(rel, r.antecedent, r.consequent)
        assert direct.scores == r.scores and direct.significance == r.significance
        assert r.ct == ContingencyTable.from_relation(rel, r.antecedent, r.consequent)


def _fake(t, ante_len, name):
    from sigrule.measures import MeasureReport
    from sigrule.miner import Rule

    rel = load_transactions(" ".join(f"{name}{i}" for i in range(ante_len)) + " z\n")
    ante = Event(frozenset(rel.literal(f"{name}{i}") for i in range(ante_len)))
    return Rule(ante, rel.event("z"), ContingencyTable(1, 0, 0, 1), MeasureReport(t=t))


def test_rank_order_and_level():
    rules = [_fake(2.4, 1, "a"), _fake(3.1, 1, "b"), _fake(1.9, 1, "c")]
    ranked = rank_significant(rules, MineConfig(K=2))
    assert [r.t for r in ranked] == [3.1, 2.4]
    assert rank_significant(rules, MineConfig(K=10)) == []


def test_rank_tie_break():
    long, short = _fake(3.0, 2, "a"), _fake(3.0, 1, "b")
    assert rank_significant([long, short], MineConfig()) == [short, long]


def test_bonferroni_level():
    rel = rand_rel(9, 300, 6)
    res = mine(rel, MineConfig(bonferroni=True))
    assert res.effective_K == bonferroni_threshold(2.0, len(res.rules))
    assert all(r.t >= res.effective_K for r in res.ranked)
    fixed = mine(rel, MineConfig(bonferroni=True, bonferroni_tests=4))
    assert fixed.effective_K == 4.0


def test_threads_do_not_change_output():
    rel = rand_rel(10, 400, 10)
    one = mine(rel, MineConfig(literals="all", max_len=3, threads=1))
    many = mine(rel, MineConfig(literals="all", max_len=3, threads=4))
    assert list(one.sets.supports.items()) == list(many.sets.supports.items())
    assert [(r.antecedent, r.consequent, r.t) for r in one.ranked] == [(r.antecedent, r.consequent, r.t) for r in many.ranked]


def test_t_order_matches_exact_p_for_shared_null():
    # with one marginal product the exact tail is monotone in the joint count, like t
    rng = np.random.default_rng(11)
    n, n_x, n_y = 400, 120, 150
    tables = [ContingencyTable.from_counts(n, n_x, n_y, int(m)) for m in rng.integers(50, 90, 30)]
    from sigrule.significance import assess

    results = sorted((assess(ct) for ct in tables), key=lambda r: -r.t_value)
    assert all(r.approx_valid for r in results)
    assert all(a.p_exact <= b.p_exact for a, b in zip(results, results[1:]))


def test_t_order_can_disagree_with_exact_p_across_marginals():
    # a rare consequent has a heavier upper tail than the normal curve at the same t
    from sigrule.significance import assess

    rare = assess(ContingencyTable.from_counts(10_000, 500, 500, 41))
    common = assess(ContingencyTable.from_counts(10_000, 5000, 5000, 2633))
    assert rare.approx_valid and common.approx_valid
    assert rare.t_value > common.t_value and rare.p_exact > common.p_exact


def test_invalid_configs():
    for kwargs in ({"K": -1}, {"max_len": 0}, {"min_fr": 0}, {"min_fr": 1.5}, {"literals": "neg"}, {"threads": 0}):
        with pytest.raises(ValueError):
            MineConfig(**kwargs)
