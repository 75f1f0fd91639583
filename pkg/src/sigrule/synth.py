"""Parametric joint distributions, sampling, and the measure error-type audit.

The audit judges each measure's accept/reject decision on a pool of
scenarios against the ground truth ``t(X->Y) >= K``.  A measure is flagged
for type 1 error when it accepts an insignificant rule and for type 2 error
when it rejects a significant one.  The J-measure has no natural cutoff, so
its flags come from ordering contradictions: an insignificant rule scoring
above a significant one means every cutoff commits at least one error.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import measures as M
from .measures import ContingencyTable, JointDistribution, UndefinedMeasure
from .relation import Relation
from .significance import safe_min_frequency, t_hat_frgamma, t_statistic

KINDS = ("probesim", "probesim2", "two_by_two", "epsilon_phi", "epsilon_chi2")
MEASURE_NAMES = ("fr&cf", "fr&gamma", "chi2", "phi", "J")
MEASURE_ALIASES = {
    "fr&cf": "fr&cf", "frcf": "fr&cf",
    "fr&gamma": "fr&gamma", "frgamma": "fr&gamma",
    "chi2": "chi2", "phi": "phi", "j": "J", "J": "J",
}
# which companion rules feed into each measure's value for X->Y
CONTRIBUTING = {
    "fr&cf": "X->Y",
    "fr&gamma": "X->Y",
    "chi2": "X->Y, !X->Y, X->!Y, !X->!Y",
    "phi": "X->Y, !X->!Y",
    "J": "X->Y, X->!Y",
}

# relative slack when comparing a statistic to its level; keeps boundary cases stable
_TIE = 1e-12


class IllegalFamily(ValueError):
    """Parameters fall outside the family's legality window."""


@dataclass(frozen=True)
class TableFamily:
    """A parametric distribution.

    ``marginals`` is ``(P(A), P(B), P(C))`` for the three-attribute families
    (``A`` and ``B`` independent unless ``joint_ab`` gives the four ``A,B`` cells
    in the order ``AB, A!B, !AB, !A!B``) and ``(P(X), P(Y))`` for ``two_by_two``.
    """

    kind: str
    marginals: tuple[float, ...] = ()
    d: float = 0.0
    eps: float | None = None
    joint_ab: tuple[float, float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        object.__setattr__(self, "marginals", tuple(float(m) for m in self.marginals))
        if self.joint_ab is not None:
            object.__setattr__(self, "joint_ab", tuple(float(v) for v in self.joint_ab))


def _check_prob(name: str, p: float) -> None:
    if not 0 <= p <= 1:
        raise IllegalFamily(f"{name}={p} is not a probability")


def _three_attribute(family: TableFamily, signs: dict[tuple[int, int, int], int]) -> JointDistribution:
    if len(family.marginals) != 3:
        raise IllegalFamily("three-attribute families need marginals (P(A), P(B), P(C))")
    pa, pb, pc = family.marginals
    for name, p in (("P(A)", pa), ("P(B)", pb), ("P(C)", pc)):
        _check_prob(name, p)
    if family.joint_ab is not None:
        ab = dict(zip(((1, 1), (1, 0), (0, 1), (0, 0)), family.joint_ab))
        if any(v < 0 for v in ab.values()) or abs(sum(ab.values()) - 1) > 1e-12:
            raise IllegalFamily("joint_ab is not a distribution over A,B")
    else:
        ab = {(a, b): (pa if a else 1 - pa) * (pb if b else 1 - pb) for a in (1, 0) for b in (1, 0)}
    d = family.d
    if d < 0:
        raise IllegalFamily(f"d={d} must be nonnegative")
    # bound printed with the tables; the cell check below is the binding one
    caption = min(ab[(1, 0)] * (1 - pc), (1 - ab[(1, 0)]) * pc)
    if d > caption:
        raise IllegalFamily(f"d={d} exceeds min{{P(A,!B)P(!C), (1-P(A,!B))P(C)}}={caption}")
    probs = np.zeros(8)
    for (a, b, c), sign in signs.items():
        base = ab[(a, b)] * (pc if c else 1 - pc)
        value = base + sign * d
        if value < 0:
            cell = "".join(s if v else "!" + s for s, v in zip("ABC", (a, b, c)))
            raise IllegalFamily(f"d={d} exceeds {base} and would make cell {cell} negative")
        probs[a | (b << 1) | (c << 2)] = value
    return JointDistribution(("A", "B", "C"), probs)


_PROBESIM = {
    (1, 1, 1): 0, (1, 1, 0): 0, (1, 0, 1): 1, (1, 0, 0): -1,
    (0, 1, 1): -1, (0, 1, 0): 1, (0, 0, 1): 0, (0, 0, 0): 0,
}
_PROBESIM2 = {
    (1, 1, 1): -1, (1, 1, 0): 1, (1, 0, 1): 1, (1, 0, 0): -1,
    (0, 1, 1): -1, (0, 1, 0): 1, (0, 0, 1): 1, (0, 0, 0): -1,
}


def build_distribution(family: TableFamily) -> JointDistribution:
    if family.kind == "probesim":
        return _three_attribute(family, _PROBESIM)
    if family.kind == "probesim2":
        return _three_attribute(family, _PROBESIM2)
    if family.kind == "two_by_two":
        if len(family.marginals) != 2:
            raise IllegalFamily("two_by_two needs marginals (P(X), P(Y))")
        px, py = family.marginals
        _check_prob("P(X)", px)
        _check_prob("P(Y)", py)
        d = family.d
        if d >= 0:
            bound = min((1 - px) * py, px * (1 - py))
            if d > bound:
                raise IllegalFamily(f"d={d} exceeds min{{P(!X)P(Y), P(X)P(!Y)}}={bound}")
        else:
            bound = min(px * py, (1 - px) * (1 - py))
            if -d > bound:
                raise IllegalFamily(f"|d|={-d} exceeds min{{P(X)P(Y), P(!X)P(!Y)}}={bound}")
        cells = [
            (1 - px) * (1 - py) + d,  # !X !Y
            px * (1 - py) - d,        # X !Y
            (1 - px) * py - d,        # !X Y
            px * py + d,              # X Y
        ]
        return JointDistribution(("X", "Y"), np.clip(cells, 0.0, None))
    # both epsilon families: P(X)=P(Y)=1-eps with maximal d = eps(1-eps)
    eps = family.eps
    if eps is None or not 0 < eps < 1:
        raise IllegalFamily(f"eps={eps} must lie in (0, 1)")
    return JointDistribution(("X", "Y"), [eps, 0.0, 0.0, 1 - eps])


def held_t_family(p_x: float, p_y: float, n: int, t: float) -> TableFamily:
    """``two_by_two`` family whose rule ``X->Y`` has exactly the given ``t`` at ``n`` rows."""
    e = p_x * p_y
    return TableFamily("two_by_two", (p_x, p_y), d=t * math.sqrt(e * (1 - e)) / math.sqrt(n))


def sample_relation(dist: JointDistribution, n: int, seed: int) -> Relation:
    """Draw ``n`` i.i.d. rows from ``dist``."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    probs = np.asarray(dist.probs, dtype=float)
    codes = rng.choice(len(probs), size=n, p=probs / probs.sum())
    bits = (codes[:, None] >> np.arange(dist.size)) & 1
    return Relation.from_matrix(bits.astype(np.uint8), dist.attrs)


@dataclass(frozen=True)
class Scenario:
    name: str
    family: TableFamily
    n: int
    rule: tuple[tuple[str, ...], tuple[str, ...]] = (("X",), ("Y",))
    role: str = ""

    def table(self, seed: int | None = None) -> ContingencyTable:
        dist = build_distribution(self.family)
        x = {a.lstrip("!"): not a.startswith("!") for a in self.rule[0]}
        y = {a.lstrip("!"): not a.startswith("!") for a in self.rule[1]}
        if seed is None:
            return dist.table(x, y, self.n)
        rel = sample_relation(dist, self.n, seed)
        xe = rel.event([("" if v else "!") + k for k, v in x.items()])
        ye = rel.event([("" if v else "!") + k for k, v in y.items()])
        return ContingencyTable.from_relation(rel, xe, ye)


@dataclass(frozen=True)
class AuditSettings:
    K: float = 2.0
    min_fr: float = 0.1
    min_cf: float = 0.6
    phi_cutoff: float = 0.3
    n_values: tuple[int, ...] = (1000, 100_000, 10_000_000)


@dataclass(frozen=True)
class Witness:
    scenario: str
    kind: str
    marginals: tuple[float, ...]
    d: float
    eps: float | None
    n: int
    value: float
    t: float


@dataclass
class MeasureAudit:
    measure: str
    type1: bool = False
    type2: bool = False
    type1_witnesses: list[Witness] = field(default_factory=list)
    type2_witnesses: list[Witness] = field(default_factory=list)


@dataclass
class AuditReport:
    settings: AuditSettings
    rows: dict[str, MeasureAudit]
    undefined: list[tuple[str, str]] = field(default_factory=list)

    def grid(self) -> dict[str, tuple[str, str]]:
        return {m: ("+" if a.type1 else "-", "+" if a.type2 else "-") for m, a in self.rows.items()}


def default_scenarios(settings: AuditSettings | None = None) -> list[Scenario]:
    s = settings or AuditSettings()
    out = [
        Scenario("high_py_independent", TableFamily("two_by_two", (0.5, 0.9), d=0.0), 10_000,
                 role="confident but independent rule"),
        Scenario("low_fr_high_gamma", TableFamily("two_by_two", (0.05, 0.05), d=0.04 - 0.05 * 0.05), 1_000,
                 role="rare, strongly dependent, significant rule"),
        Scenario("chi2_epsilon", TableFamily("epsilon_chi2", eps=0.0004), 10_000,
                 role="chi2 equals n while X->Y is insignificant"),
        Scenario("phi_epsilon", TableFamily("epsilon_phi", eps=0.0004), 10_000,
                 role="phi equals 1 while X->Y is insignificant"),
        Scenario("j_complement", TableFamily("two_by_two", (0.5, 0.5), d=-0.25), 10_000,
                 role="P(Y|X)=0: J rewards the complement rule X->!Y"),
        Scenario("j_low_frequency", TableFamily("two_by_two", (0.25, 0.5), d=0.1875 - 0.125), 10_000,
                 role="P(Y|X)=0.75, P(Y)=0.5, P(X)=0.25: small J, large t"),
    ]
    for n in s.n_values:
        out.append(Scenario(f"phi_small@{n}", held_t_family(0.1, 0.1, n, 1.5 * s.K), n,
                            role="t held at 1.5K while n grows"))
    return out


def _meets(value: float, level: float) -> bool:
    return value >= level - _TIE * max(1.0, abs(level))


def _p_min(ct: ContingencyTable) -> float | None:
    ps = [p for p in (ct.p_x, 1 - ct.p_x, ct.p_y, 1 - ct.p_y) if p > 0]
    return min(ps) if ps else None


def _decide(measure: str, ct: ContingencyTable, st: AuditSettings) -> tuple[float, bool | None]:
    """Measure value and its accept decision (``None`` for J, which is judged by ordering)."""
    if measure == "fr&cf":
        fr, cf = M.frequency(ct), M.confidence(ct)
        return cf, fr >= st.min_fr and cf >= st.min_cf
    if measure == "fr&gamma":
        fr, g = M.frequency(ct), M.gamma(ct)
        p_min = _p_min(ct)
        floor = safe_min_frequency(p_min, int(round(ct.n)), st.K) if p_min is not None and p_min < 1 else 1.0
        t = math.sqrt(ct.n) * t_hat_frgamma(fr, g)
        return g, fr >= floor * (1 - _TIE) and _meets(t, st.K)
    if measure == "chi2":
        value = M.chi2_rule(ct)
        return value, _meets(value, st.K ** 2) and M.dependence_value(ct) > 0
    if measure == "phi":
        value = M.phi(ct)
        return value, _meets(value, st.phi_cutoff)
    if measure == "J":
        return M.j_measure(ct), None
    raise ValueError(f"unknown measure {measure!r}")


def _witness(sc: Scenario, value: float, t: float) -> Witness:
    f = sc.family
    return Witness(sc.name, f.kind, f.marginals, f.d, f.eps, sc.n, value, t)


def audit_measures(
    scenarios: Sequence[Scenario] | None = None,
    n_values: Iterable[int] | None = None,
    K: float | None = None,
    settings: AuditSettings | None = None,
    measures: Iterable[str] = MEASURE_NAMES,
    empirical_seed: int | None = None,
) -> AuditReport:
    """Flag type 1 / type 2 errors of each measure against the ``t >= K`` ground truth.

    With ``empirical_seed`` the tables come from relations sampled from each
    scenario's distribution instead of the exact distribution.
    """
    st = settings or AuditSettings()
    if K is not None:
        st = AuditSettings(K, st.min_fr, st.min_cf, st.phi_cutoff, st.n_values)
    if n_values is not None:
        st = AuditSettings(st.K, st.min_fr, st.min_cf, st.phi_cutoff, tuple(int(n) for n in n_values))
    if scenarios is None:
        scenarios = default_scenarios(st)
    wanted = [MEASURE_ALIASES.get(m, m) for m in measures]
    for m in wanted:
        if m not in MEASURE_NAMES:
            raise ValueError(f"unknown measure {m!r}")

    report = AuditReport(st, {m: MeasureAudit(m) for m in wanted})
    evaluated = []
    for i, sc in enumerate(scenarios):
        ct = sc.table(None if empirical_seed is None else empirical_seed + i)
        try:
            t = t_statistic(ct)
        except UndefinedMeasure:
            report.undefined.append((sc.name, "t"))
            continue
        evaluated.append((sc, ct, t, _meets(t, st.K)))

    for m in wanted:
        row = report.rows[m]
        scored = []
        for sc, ct, t, truth in evaluated:
            try:
                value, accept = _decide(m, ct, st)
            except UndefinedMeasure:
                report.undefined.append((sc.name, m))
                continue
            scored.append((sc, value, t, truth))
            if accept is None:
                continue
            if accept and not truth:
                row.type1_witnesses.append(_witness(sc, value, t))
            elif truth and not accept:
                row.type2_witnesses.append(_witness(sc, value, t))
        if m == "J":
            spurious = [s for s in scored if not s[3]]
            significant = [s for s in scored if s[3]]
            if spurious and significant:
                top_spurious = max(spurious, key=lambda s: s[1])
                low_significant = min(significant, key=lambda s: s[1])
                if top_spurious[1] > low_significant[1]:
                    row.type1_witnesses.append(_witness(top_spurious[0], top_spurious[1], top_spurious[2]))
                    row.type2_witnesses.append(_witness(low_significant[0], low_significant[1], low_significant[2]))
        row.type1 = bool(row.type1_witnesses)
        row.type2 = bool(row.type2_witnesses)
    return report


# --- scenario config documents -------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def load_scenarios(text: str) -> tuple[AuditSettings, list[Scenario]]:
    """Parse an INI-style scenario document.

    ``[audit]`` holds ``K``, ``min_fr``, ``min_cf``, ``phi_cutoff`` and ``n_values``.
    Each ``[scenario NAME]`` section has ``kind`` and, depending on it,
    ``marginals``, ``d`` (or ``p_xy``, or a target ``t``), ``eps``, ``joint_ab``,
    ``rule`` (``A,B=>C``) and ``n`` (one value or a list, which expands the
    scenario once per value).  A document without scenario sections audits the
    built-in pool under the given settings.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text)
    base = AuditSettings()
    if cp.has_section("audit"):
        sec = cp["audit"]
        base = AuditSettings(
            K=sec.getfloat("K", base.K),
            min_fr=sec.getfloat("min_fr", base.min_fr),
            min_cf=sec.getfloat("min_cf", base.min_cf),
            phi_cutoff=sec.getfloat("phi_cutoff", base.phi_cutoff),
            n_values=tuple(int(v) for v in _floats(sec["n_values"])) if "n_values" in sec else base.n_values,
        )
    scenarios: list[Scenario] = []
    for name in cp.sections():
        if not name.startswith("scenario"):
            if name != "audit":
                raise ValueError(f"unknown section [{name}]")
            continue
        label = name[len("scenario"):].strip(" :") or f"scenario{len(scenarios) + 1}"
        sec = cp[name]
        kind = sec.get("kind")
        if kind is None:
            raise ValueError(f"[{name}] needs a kind")
        ns = [int(v) for v in _floats(sec["n"])] if "n" in sec else list(base.n_values)
        marg = _floats(sec["marginals"]) if "marginals" in sec else ()
        eps = sec.getfloat("eps") if "eps" in sec else None
        joint_ab = _floats(sec["joint_ab"]) if "joint_ab" in sec else None
        if "rule" in sec:
            lhs, _, rhs = sec["rule"].partition("=>")
            rule = (tuple(p.strip() for p in lhs.split(",") if p.strip()),
                    tuple(p.strip() for p in rhs.split(",") if p.strip()))
        else:
            rule = (("A", "B"), ("C",)) if kind in ("probesim", "probesim2") else (("X",), ("Y",))
        role = sec.get("role", "")
        for n in ns:
            if "t" in sec:
                fam = held_t_family(marg[0], marg[1], n, sec.getfloat("t"))
            else:
                if "p_xy" in sec:
                    d = sec.getfloat("p_xy") - marg[0] * marg[1]
                else:
                    d = sec.getfloat("d", 0.0)
                fam = TableFamily(kind, marg, d=d, eps=eps, joint_ab=joint_ab)
            scen_name = label if len(ns) == 1 else f"{label}@{n}"
            scenarios.append(Scenario(scen_name, fam, n, rule, role))
    return base, scenarios


# --- report serialization -------------------------------------------------------

ROW_FIELDS = ("measure", "error_type", "flag", "scenario", "kind", "marginals", "d", "eps", "n", "value", "t")


def report_rows(report: AuditReport) -> list[dict[str, str]]:
    """Machine-readable rows; floats use ``repr`` so parsing back is lossless."""
    rows = []
    for m, audit in report.rows.items():
        for etype, flag, wits in (("type1", audit.type1, audit.type1_witnesses),
                                  ("type2", audit.type2, audit.type2_witnesses)):
            base = {"measure": m, "error_type": etype, "flag": "+" if flag else "-"}
            if not wits:
                rows.append({**base, **{k: "" for k in ROW_FIELDS[3:]}})
            for w in wits:
                rows.append({
                    **base,
                    "scenario": w.scenario,
                    "kind": w.kind,
                    "marginals": ",".join(repr(v) for v in w.marginals),
                    "d": repr(w.d),
                    "eps": "" if w.eps is None else repr(w.eps),
                    "n": str(w.n),
                    "value": repr(w.value),
                    "t": repr(w.t),
                })
    return rows


def format_rows_tsv(report: AuditReport) -> str:
    s = report.settings
    out = io.StringIO()
    out.write(f"# K={s.K!r} min_fr={s.min_fr!r} min_cf={s.min_cf!r} phi_cutoff={s.phi_cutoff!r} "
              f"n_values={','.join(str(n) for n in s.n_values)}\n")
    out.write("\t".join(ROW_FIELDS) + "\n")
    for row in report_rows(report):
        out.write("\t".join(row[k] for k in ROW_FIELDS) + "\n")
    return out.getvalue()


def parse_rows_tsv(text: str) -> AuditReport:
    settings = AuditSettings()
    rows: dict[str, MeasureAudit] = {}
    header = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            kv = dict(item.split("=", 1) for item in line[1:].split())
            settings = AuditSettings(
                K=float(kv["K"]), min_fr=float(kv["min_fr"]), min_cf=float(kv["min_cf"]),
                phi_cutoff=float(kv["phi_cutoff"]),
                n_values=tuple(int(v) for v in kv["n_values"].split(",") if v),
            )
            continue
        cells = line.split("\t")
        if header is None:
            header = cells
            continue
        rec = dict(zip(header, cells + [""] * (len(header) - len(cells))))
        audit = rows.setdefault(rec["measure"], MeasureAudit(rec["measure"]))
        flag = rec["flag"] == "+"
        if rec["error_type"] == "type1":
            audit.type1 = flag
            target = audit.type1_witnesses
        else:
            audit.type2 = flag
            target = audit.type2_witnesses
        if rec["scenario"]:
            target.append(Witness(
                rec["scenario"], rec["kind"],
                tuple(float(v) for v in rec["marginals"].split(",") if v),
                float(rec["d"]), float(rec["eps"]) if rec["eps"] else None,
                int(rec["n"]), float(rec["value"]), float(rec["t"]),
            ))
    return AuditReport(settings, rows)


def report_to_json(report: AuditReport) -> dict:
    return {
        "settings": asdict(report.settings),
        "grid": {m: {"type1": g[0], "type2": g[1]} for m, g in report.grid().items()},
        "rows": report_rows(report),
        "undefined": [list(u) for u in report.undefined],
    }


def format_grid(report: AuditReport) -> str:
    """Human-readable +/- grid with one witness per flag."""
    lines = ["measure   type1  type2  contributing rules"]
    for m, (t1, t2) in report.grid().items():
        lines.append(f"{m:<9} {t1:^5}  {t2:^5}  {CONTRIBUTING[m]}")
    lines.append("")
    for m, audit in report.rows.items():
        for etype, wits in (("type1", audit.type1_witnesses), ("type2", audit.type2_witnesses)):
            for w in wits:
                lines.append(f"{m} {etype}: {w.scenario} (n={w.n}, value={w.value:.9g}, t={w.t:.9g})")
    return "\n".join(lines) + "\n"
