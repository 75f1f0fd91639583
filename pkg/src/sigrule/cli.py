"""``sigrule`` command line: mine, score, bounds, contour, audit.

Exit codes: 0 results, 3 no results, 2 usage error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from . import synth
from .measures import ContingencyTable
from .miner import MineConfig, Rule, mine, score_rule
from .redundancy import assess_redundancy
from .relation import LoadError, Relation, read_relation
from .significance import (
    min_confidence_for_significance,
    min_frequency_for_significance,
    morishita_chi2_bound,
    safe_min_frequency,
    t_hat_frcf,
    t_hat_frgamma,
    theorem1_frequency_at_K,
)

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2, 3

NUMERIC_FIELDS = ("fr", "cf", "gamma", "t", "p_exact", "p_normal", "chi2", "phi", "j")
COUNT_FIELDS = ("c11", "c10", "c01", "c00")
REDUNDANCY_FIELDS = ("classic", "closed", "productive", "improvement", "superiority", "imp")


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """9 significant digits; ``undefined`` for missing values."""
    if value is None:
        return "undefined"
    if isinstance(value, int):
        return str(value)
    return f"{value:.9g}"


def _num(value):
    # the JSON form carries the same rounded digits as the TSV form
    if value is None or isinstance(value, int):
        return value
    return float(fmt(value))


def _count(v):
    return int(v) if float(v).is_integer() else v


@dataclass
class RuleRecord:
    antecedent: str
    consequent: str
    n: int
    c11: int
    c10: int
    c01: int
    c00: int
    fr: float | None
    cf: float | None
    gamma: float | None
    t: float | None
    p_exact: float | None
    p_normal: float | None
    chi2: float | None
    phi: float | None
    j: float | None
    redundancy: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_rule(cls, rule: Rule, redundancy: dict[str, str] | None = None) -> RuleRecord:
        s, sig = rule.scores, rule.significance
        return cls(
            str(rule.antecedent), str(rule.consequent), _count(rule.ct.n),
            *(_count(c) for c in rule.ct.as_tuple()),
            fr=s.fr, cf=s.cf, gamma=s.gamma, t=s.t,
            p_exact=sig.p_exact if sig else None,
            p_normal=sig.p_normal if sig else None,
            chi2=s.chi2, phi=s.phi, j=s.j,
            redundancy=dict(redundancy or {}),
        )

    @staticmethod
    def columns(with_redundancy: bool) -> list[str]:
        cols = ["antecedent", "consequent", "n", *COUNT_FIELDS, *NUMERIC_FIELDS]
        return cols + list(REDUNDANCY_FIELDS) if with_redundancy else cols

    def tsv(self, with_redundancy: bool = False) -> str:
        cells = []
        for col in self.columns(with_redundancy):
            if col in REDUNDANCY_FIELDS:
                cells.append(self.redundancy.get(col, ""))
            else:
                v = getattr(self, col)
                cells.append(v if isinstance(v, str) else fmt(v))
        return "\t".join(cells)

    def to_json(self) -> dict:
        out = {"antecedent": self.antecedent, "consequent": self.consequent, "n": self.n}
        out.update({c: _num(getattr(self, c)) for c in COUNT_FIELDS})
        out.update({c: _num(getattr(self, c)) for c in NUMERIC_FIELDS})
        if self.redundancy:
            out["redundancy"] = dict(self.redundancy)
        return out

    @classmethod
    def parse_tsv(cls, header: Sequence[str], line: str) -> RuleRecord:
        rec = dict(zip(header, line.rstrip("\n").split("\t")))

        def val(text: str):
            if text == "undefined":
                return None
            return float(text)

        counts = {c: _count(float(rec[c])) for c in ("n", *COUNT_FIELDS)}
        red = {c: rec[c] for c in REDUNDANCY_FIELDS if c in rec}
        return cls(rec["antecedent"], rec["consequent"], **counts,
                   **{c: val(rec[c]) for c in NUMERIC_FIELDS}, redundancy=red)

    @classmethod
    def from_json(cls, obj: dict) -> RuleRecord:
        return cls(**{k: v for k, v in obj.items() if k != "redundancy"},
                   redundancy=dict(obj.get("redundancy", {})))


# --- argument parsing -------------------------------------------------------

def _add_k(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", "--K", "-K", dest="K", type=float, default=2.0,
                   help="significance level on t (default 2)")


def _add_dataset(p: argparse.ArgumentParser) -> None:
    p.add_argument("dataset", help="transactions file, or .csv 0/1 matrix")
    p.add_argument("--format", choices=("csv", "transactions"), default=None,
                   help="override format detection by extension")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigrule", description="Statistically significant association rules.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mine", help="mine rules ranked by t")
    _add_dataset(p)
    _add_k(p)
    p.add_argument("--max-len", type=int, default=None, help="largest set size")
    p.add_argument("--min-fr", type=float, default=None, help="explicit frequency floor")
    p.add_argument("--consequent", default=None, help="fix the consequent literal, e.g. C or !C")
    p.add_argument("--literals", choices=("positive", "all"), default="positive")
    p.add_argument("--bonferroni", nargs="?", type=int, const=0, default=None, metavar="M",
                   help="use sqrt(M) K; M defaults to the number of rules tested")
    p.add_argument("--json", action="store_true", help="JSON output")
    p.add_argument("--show-all", action="store_true", help="also list rules below the level")
    p.add_argument("--redundancy", action="store_true", help="add redundancy statuses")
    p.add_argument("--min-imp", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("score", help="score one rule")
    _add_dataset(p)
    p.add_argument("--rule", required=True, help='rule spec, e.g. "A,!B=>C"')
    p.add_argument("--json", action="store_true")
    p.add_argument("--redundancy", action="store_true")
    p.add_argument("--min-imp", type=float, default=0.0)

    p = sub.add_parser("bounds", help="closed-form bounds")
    _add_k(p)
    p.add_argument("--px", type=float)
    p.add_argument("--py", type=float)
    p.add_argument("--pmin", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--pzc", type=float, help="P(Z,C)")
    p.add_argument("--pznc", type=float, help="P(Z,!C)")
    p.add_argument("--pc", type=float, help="P(C)")
    p.add_argument("--n", type=int)

    p = sub.add_parser("contour", help="emit t-hat grids")
    p.add_argument("mode", choices=("frcf", "frgamma"))
    p.add_argument("--py", type=float, help="fixed P(Y) for frcf")
    p.add_argument("--gamma-max", type=float, help="largest gamma for frgamma")
    p.add_argument("--resolution", type=int, default=50)
    p.add_argument("--output", "-o", default=None, help="grid file (default stdout)")

    p = sub.add_parser("audit", help="measure error-type audit")
    p.add_argument("config", nargs="?", default=None, help="scenario config document")
    _add_k(p)
    p.set_defaults(K=None)
    p.add_argument("--measures", default=None, help="comma list of fr&cf,fr&gamma,chi2,phi,J")
    p.add_argument("--format", choices=("text", "tsv", "json"), default="text")
    p.add_argument("--empirical-seed", type=int, default=None,
                   help="audit relations sampled with this seed instead of exact distributions")
    return parser


# --- commands ----------------------------------------------------------------

def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("SIGRULE_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SIGRULE_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


def _load(args) -> Relation:
    return read_relation(args.dataset, fmt=args.format)


def _emit_records(records: list[RuleRecord], as_json: bool, redundancy: bool, header: dict, out: TextIO) -> None:
    if as_json:
        json.dump({**header, "rules": [r.to_json() for r in records]}, out, indent=2)
        out.write("\n")
        return
    out.write("# " + " ".join(f"{k}={fmt(v) if not isinstance(v, str) else v}" for k, v in header.items()) + "\n")
    cols = RuleRecord.columns(redundancy)
    out.write("\t".join(cols) + "\n")
    for r in records:
        out.write(r.tsv(redundancy) + "\n")


def _labels(rule: Rule, rel: Relation, min_imp: float) -> dict[str, str]:
    verdict = assess_redundancy(rule, rel, min_imp=min_imp)
    labels = verdict.labels()
    labels["imp"] = fmt(verdict.imp)
    return labels


def cmd_mine(args, out: TextIO) -> int:
    rel = _load(args)
    cons = rel.literal(args.consequent) if args.consequent else None
    cfg = MineConfig(
        K=args.K, max_len=args.max_len, min_fr=args.min_fr, consequent=cons,
        literals=args.literals, bonferroni=args.bonferroni is not None,
        bonferroni_tests=args.bonferroni or None, threads=_threads(args.threads),
    )
    result = mine(rel, cfg)
    if result.sets.warning:
        print(f"warning: {result.sets.warning}", file=sys.stderr)
    shown = result.rules if args.show_all else result.ranked
    records = [
        RuleRecord.from_rule(r, _labels(r, rel, args.min_imp) if args.redundancy else None)
        for r in shown
    ]
    header = {
        "n": rel.n,
        "K": cfg.K,
        "effective_K": result.effective_K,
        "floor": result.sets.floor,
        "tested": len(result.rules),
        "significant": len(result.ranked),
        "undefined": result.undefined,
    }
    _emit_records(records, args.json, args.redundancy, header, out)
    return EXIT_OK if result.ranked else EXIT_EMPTY


def cmd_score(args, out: TextIO) -> int:
    rel = _load(args)
    lhs, sep, rhs = args.rule.partition("=>")
    if not sep:
        raise UsageError("rule spec must look like A,!B=>C")
    ante, cons = rel.event(lhs), rel.event(rhs)
    if not len(ante) or not len(cons):
        raise UsageError("rule needs literals on both sides")
    if not ante.disjoint(cons):
        raise UsageError("antecedent and consequent share an attribute")
    rule = score_rule(rel, ante, cons)
    rec = RuleRecord.from_rule(rule, _labels(rule, rel, args.min_imp) if args.redundancy else None)
    _emit_records([rec], args.json, args.redundancy, {"n": rel.n}, out)
    return EXIT_OK


BOUND_COMBOS = (
    "--px --py --n [--K]   minimum frequency and confidence for t >= K",
    "--pmin --n [--K]      global safe frequency floor",
    "--gamma --n [--K]     frequency at which t = K for a given gamma",
    "--pzc --pznc --pc --n upper bound on chi2 over specializations of Z -> C",
)


def cmd_bounds(args, out: TextIO) -> int:
    given = {k for k in ("px", "py", "pmin", "gamma", "pzc", "pznc", "pc", "n") if getattr(args, k) is not None}
    combos = {
        frozenset({"px", "py", "n"}): "minfr",
        frozenset({"pmin", "n"}): "floor",
        frozenset({"gamma", "n"}): "theorem1",
        frozenset({"pzc", "pznc", "pc", "n"}): "morishita",
    }
    which = combos.get(frozenset(given))
    if which is None:
        raise UsageError("bounds needs exactly one of:\n  " + "\n  ".join(BOUND_COMBOS))
    n, K = args.n, args.K
    if n < 1:
        raise UsageError("--n must be positive")
    rows: list[tuple[str, float, str]] = []
    if which == "minfr":
        rows.append(("min_fr", min_frequency_for_significance(args.px, args.py, n, K),
                     "PxPy + K sqrt(PxPy(1-PxPy))/sqrt(n)"))
        rows.append(("min_cf", min_confidence_for_significance(args.px, args.py, n, K), "min_fr / Px"))
    elif which == "floor":
        rows.append(("min_fr_safe", safe_min_frequency(args.pmin, n, K),
                     "K^2 p / (n (1-p)^2 + K^2 p^2), p = pmin"))
    elif which == "theorem1":
        rows.append(("fr_at_K", theorem1_frequency_at_K(args.gamma, n, K),
                     "K^2 gamma / (n (gamma-1)^2 + K^2)"))
    else:
        c11, c10, n_c = args.pzc * n, args.pznc * n, args.pc * n
        ct = ContingencyTable(c11, c10, n_c - c11, n - c10 - n_c)
        rows.append(("chi2_upper", morishita_chi2_bound(ct),
                     "max{n P(Z,C) P(!C) / ((1-P(Z,C)) P(C)), n P(Z,!C) P(C) / ((1-P(Z,!C)) P(!C))}"))
    for name, value, formula in rows:
        out.write(f"{name}\t{fmt(value)}\t{formula}\n")
    return EXIT_OK


def contour_points(mode: str, fixed: float, resolution: int) -> list[tuple[float, float, float]]:
    """``(x, y, t_hat)`` over the valid region of a ``resolution x resolution`` grid.

    ``frcf``: x = P(X,Y), y = P(Y|X) in (0, 1], ``fixed`` = P(Y).
    ``frgamma``: x = P(X,Y) in (0, 1], y = gamma in (1, fixed].
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axis = [(i + 1) / resolution for i in range(resolution)]
    pts = []
    if mode == "frcf":
        p_y = fixed
        if not 0 < p_y < 1:
            raise ValueError("P(Y) must lie in (0, 1)")
        for fr in axis:
            for cf in axis:
                # the table must exist: P(X,Y) <= P(Y), P(X) <= 1, P(X,!Y) <= P(!Y)
                if fr > p_y or fr > cf or fr * (1 - cf) / cf > 1 - p_y:
                    continue
                try:
                    t = t_hat_frcf(fr, cf, p_y)
                except ArithmeticError:
                    continue
                if t > 0:
                    pts.append((fr, cf, t))
    elif mode == "frgamma":
        g_max = fixed
        if not g_max > 1:
            raise ValueError("gamma-max must exceed 1")
        gammas = [1 + (g_max - 1) * (i + 1) / resolution for i in range(resolution)]
        for fr in axis:
            for g in gammas:
                if fr * g > 1:
                    continue
                try:
                    t = t_hat_frgamma(fr, g)
                except ArithmeticError:
                    continue
                if t > 0:
                    pts.append((fr, g, t))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return pts


def cmd_contour(args, out: TextIO) -> int:
    if args.mode == "frcf":
        if args.py is None or args.gamma_max is not None:
            raise UsageError("frcf needs --py (and no --gamma-max)")
        fixed, label = args.py, f"py={args.py!r}"
    else:
        if args.gamma_max is None or args.py is not None:
            raise UsageError("frgamma needs --gamma-max (and no --py)")
        fixed, label = args.gamma_max, f"gamma_max={args.gamma_max!r}"
    try:
        pts = contour_points(args.mode, fixed, args.resolution)
    except ValueError as e:
        raise UsageError(str(e)) from None
    target = open(args.output, "w") if args.output else out
    try:
        target.write(f"# mode={args.mode} fixed={label} resolution={args.resolution}\n")
        for x, y, t in pts:
            target.write(f"{x!r} {y!r} {t!r}\n")
    finally:
        if args.output:
            target.close()
    return EXIT_OK if pts else EXIT_EMPTY


def cmd_audit(args, out: TextIO) -> int:
    settings, scenarios = synth.AuditSettings(), None
    if args.config:
        try:
            with open(args.config) as fh:
                settings, scenarios = synth.load_scenarios(fh.read())
        except OSError as e:
            raise UsageError(f"cannot read config: {e}") from None
        except (ValueError, KeyError, IndexError) as e:
            raise UsageError(f"bad config: {e}") from None
        if not scenarios:
            scenarios = None
    measures = synth.MEASURE_NAMES
    if args.measures:
        measures = tuple(m.strip() for m in args.measures.split(",") if m.strip())
        bad = [m for m in measures if m not in synth.MEASURE_ALIASES]
        if bad:
            raise UsageError(f"unknown measures: {', '.join(bad)}")
    try:
        report = synth.audit_measures(scenarios, K=args.K, settings=settings, measures=measures,
                                      empirical_seed=args.empirical_seed)
    except synth.IllegalFamily as e:
        raise UsageError(f"bad scenario: {e}") from None
    if args.format == "json":
        json.dump(synth.report_to_json(report), out, indent=2)
        out.write("\n")
    elif args.format == "tsv":
        out.write(synth.format_rows_tsv(report))
    else:
        out.write(synth.format_grid(report))
    return EXIT_OK


COMMANDS = {"mine": cmd_mine, "score": cmd_score, "bounds": cmd_bounds, "contour": cmd_contour, "audit": cmd_audit}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (LoadError, KeyError, FileNotFoundError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except Exception as e:  # pragma: no cover - last resort
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
