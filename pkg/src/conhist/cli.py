"""Command-line interface.

Exit codes: 0 success / consistent, 1 inconsistent family (or axiom
violations found), 2 validation failure, 3 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .decoherence import (
    DEFAULT_EPSILON,
    DecoherenceMatrix,
    check_consistency,
    decoherence_matrix,
    probabilities,
    time_symmetric_decoherence_matrix,
)
from .errors import HistoriesError, InconsistentFamilyError
from .families import are_compatible
from .histories import HistoryFamily, TemporalSupport, completeness_check, product_family
from .hpo import family_propositions, hpo_negate, orthoalgebra_axiom_suite, prop_disjoint
from .kinematics import Dynamics, bloch_state, spin_decomposition, unit_axis
from .matrix_core import identity, max_norm
from .psg import FinitePsg, check_causality, validate_finite_psg
from .scenarios import ScenarioParseError, ScenarioValidationError, load_scenario, read_json

EXIT_OK, EXIT_INCONSISTENT, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3
MATRIX_DIGITS, PROB_DIGITS = 12, 10
# printed values below this are rounding noise; showing them makes golden files platform-dependent
DISPLAY_FLOOR = 1e-14


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


def fmt_real(x: float, digits: int) -> str:
    if abs(x) < DISPLAY_FLOOR:
        return "0"
    s = f"{x:.{digits}g}"
    return "0" if s in ("-0", "0") else s


def fmt_complex(z: complex, digits: int = MATRIX_DIGITS) -> str:
    re, im = fmt_real(z.real, digits), fmt_real(abs(z.imag), digits)
    sign = "-" if z.imag < 0 and im != "0" else "+"
    return f"{re}{sign}{im}j"


def round_sig(x: float, digits: int) -> float:
    if abs(x) < DISPLAY_FLOOR:
        return 0.0
    return float(f"{x:.{digits}g}") + 0.0


def fmt_residual(x: float) -> str:
    return f"< {DISPLAY_FLOOR:.0e}" if abs(x) < DISPLAY_FLOOR else f"{x:.3e}"


def round_residual(x: float) -> float:
    return round_sig(x, 4)


def label_name(family: HistoryFamily, label) -> str:
    return "(" + ",".join(family.branch_names(label)) + ")"


def render_matrix(rows: list[str], m: np.ndarray) -> str:
    cells = [[fmt_complex(z) for z in row] for row in m]
    width = max([len(c) for row in cells for c in row] + [len(r) for r in rows])
    head_w = max(len(r) for r in rows)
    lines = [" " * head_w + "  " + "  ".join(r.rjust(width) for r in rows)]
    for name, row in zip(rows, cells):
        lines.append(name.rjust(head_w) + "  " + "  ".join(c.rjust(width) for c in row))
    return "\n".join(lines)


def matrix_payload(family: HistoryFamily, dm: DecoherenceMatrix) -> dict:
    return {
        "kind": dm.kind,
        "labels": [list(l) for l in dm.labels],
        "names": [label_name(family, l) for l in dm.labels],
        "entries": [[[round_sig(z.real, MATRIX_DIGITS), round_sig(z.imag, MATRIX_DIGITS)]
                     for z in row] for row in dm.entries],
    }


def _emit(args, payload: dict, text: str):
    if args.format == "structured":
        print(json.dumps(payload, indent=1, sort_keys=False))
    else:
        print(text)


def _family(args) -> HistoryFamily:
    scenario = load_scenario(args.scenario)
    if args.final_state and scenario.final_state is None:
        raise ScenarioValidationError(["final_state: --final-state given but the scenario has none"])
    return scenario.family(use_final_state=True)


def _dm(args, family: HistoryFamily) -> DecoherenceMatrix:
    if args.final_state:
        return time_symmetric_decoherence_matrix(family)
    return decoherence_matrix(family)


# ----------------------------------------------------------------------------- commands

def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    family = scenario.family()
    residual = completeness_check(family)
    payload = {
        "scenario": scenario.name, "valid": True, "dimension": scenario.dimension,
        "times": list(scenario.times), "histories": len(family),
        "branch_dependent": not family.is_product, "final_state": scenario.final_state is not None,
        "completeness_residual": round_residual(residual),
    }
    text = "\n".join([
        f"scenario: {scenario.name or args.scenario}",
        f"valid: yes (dimension {scenario.dimension}, {len(scenario.times)} times, {len(family)} histories"
        + (", branch-dependent" if not family.is_product else "") + ")",
        f"completeness residual |sum C - I| = {fmt_residual(residual)}",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_decoherence_matrix(args) -> int:
    family = _family(args)
    dm = _dm(args, family)
    names = [label_name(family, l) for l in dm.labels]
    text = f"decoherence matrix ({dm.kind}, {len(names)} histories):\n" + render_matrix(names, dm.entries)
    _emit(args, {"scenario": family.name, "decoherence_matrix": matrix_payload(family, dm)}, text)
    return EXIT_OK


def _consistency_text(family, report) -> str:
    lines = [f"{report.condition} decoherence, epsilon = {report.epsilon:g}: "
             + ("CONSISTENT" if report.consistent else f"INCONSISTENT ({len(report.violations)} pairs)")]
    for (a, b), r in report.violations:
        lines.append(f"  {label_name(family, a)} vs {label_name(family, b)}: residual {fmt_real(r, MATRIX_DIGITS)}")
    return "\n".join(lines)


def _report_payload(family, report) -> dict:
    d = report.as_dict()
    for v in d["violations"]:
        v["alpha_name"] = label_name(family, v["alpha"])
        v["beta_name"] = label_name(family, v["beta"])
    return d


def cmd_consistency(args) -> int:
    family = _family(args)
    dm = _dm(args, family)
    report = check_consistency(dm, args.condition, args.tol)
    names = [label_name(family, l) for l in dm.labels]
    text = (f"scenario: {family.name}\n"
            f"decoherence matrix ({dm.kind}):\n{render_matrix(names, dm.entries)}\n"
            + _consistency_text(family, report))
    _emit(args, {"scenario": family.name, "decoherence_matrix": matrix_payload(family, dm),
                 "consistency": _report_payload(family, report)}, text)
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def _probability_text(family, table) -> str:
    names = {l: label_name(family, l) for l in table.entries}
    w = max(len(n) for n in names.values())
    lines = [f"probabilities ({table.condition} decoherence, epsilon = {table.epsilon:g}):"]
    for lab, p in table.entries.items():
        lines.append(f"  {names[lab].ljust(w)}  {fmt_real(p, PROB_DIGITS)}")
    lines.append(f"  {'sum'.ljust(w)}  {fmt_real(table.total, PROB_DIGITS)}")
    lines.append(f"worst sum-rule residual max|2 Re d(a,b)| = {fmt_residual(table.sum_rule_residual)}")
    return "\n".join(lines)


def _probability_payload(family, table) -> dict:
    d = table.as_dict()
    for row in d["probabilities"]:
        row["name"] = label_name(family, row["label"])
        row["p"] = round_sig(row["p"], PROB_DIGITS)
    d["sum"] = round_sig(d["sum"], PROB_DIGITS)
    d["sum_residual"] = round_residual(d["sum_residual"])
    d["sum_rule_residual"] = round_residual(d["sum_rule_residual"])
    return d


def cmd_probabilities(args) -> int:
    family = _family(args)
    dm = _dm(args, family)
    try:
        table = probabilities(dm, args.condition, args.tol)
    except InconsistentFamilyError as exc:
        _emit(args, {"scenario": family.name, "refused": True,
                     "consistency": _report_payload(family, exc.report)},
              "refusing to assign probabilities: " + str(exc) + "\n"
              + _consistency_text(family, exc.report))
        return EXIT_INCONSISTENT
    _emit(args, {"scenario": family.name, "kind": dm.kind,
                 "probabilities": _probability_payload(family, table)},
          f"scenario: {family.name}\n" + _probability_text(family, table))
    return EXIT_OK


def cmd_compat(args) -> int:
    fa = load_scenario(args.scenario_a).family(use_final_state=False)
    fb = load_scenario(args.scenario_b).family(use_final_state=False)
    rep = are_compatible(fa, fb, args.condition, args.tol)
    lines = [f"{fa.name or args.scenario_a}  vs  {fb.name or args.scenario_b}",
             f"relation: {rep.relation}"]
    if rep.witness is not None:
        lines.append(f"witness: {len(rep.witness)} histories on support "
                     + ", ".join(f"{t:g}" for t in rep.witness.support.times))
    if rep.obstruction:
        lines.append(f"obstruction: {rep.obstruction}")
    if rep.note:
        lines.append(f"note: {rep.note}")
    _emit(args, {"a": fa.name, "b": fb.name, **rep.as_dict()}, "\n".join(lines))
    return EXIT_OK


def cmd_hpo(args) -> int:
    family = _family(args)
    props = family_propositions(family)
    n = len(family.support)
    d = family.dim
    total = sum(p.matrix for p in props)
    exhaust = max_norm(total - identity(d ** n))
    exclusive = all(prop_disjoint(a, b) for i, a in enumerate(props) for b in props[i + 1:])
    rows = []
    for p in props:
        neg = hpo_negate(p.hpo)
        rows.append({"history": p.label, "rank": int(round(np.trace(p.matrix).real)),
                     "negation_terms": len(neg.terms),
                     "negation_residual": round_residual(max_norm(neg.matrix + p.matrix - identity(d ** n)))})
    suite = orthoalgebra_axiom_suite(props) if d ** n <= 64 and len(props) <= 16 else None
    payload = {"scenario": family.name, "hpo_dimension": d ** n, "histories": rows,
               "exclusive": exclusive, "exhaustive_residual": round_residual(exhaust),
               "orthoalgebra": None if suite is None else suite.as_dict()}
    lines = [f"scenario: {family.name}", f"HPO space: {d}^{n} = {d ** n}"]
    for r in rows:
        lines.append(f"  ({r['history']}): rank {r['rank']}, negation = {r['negation_terms']} "
                     f"orthogonal homogeneous terms (residual {fmt_residual(r['negation_residual'])})")
    lines.append(f"exclusive: {'yes' if exclusive else 'no'}; |sum - 1| = {fmt_residual(exhaust)}")
    if suite is not None:
        lines.append("orthoalgebra axioms: " + ("pass" if suite.ok else "FAIL\n" + str(suite)))
        if suite.notes.get("missing"):
            lines.append("  (set not closed; missing: " + ", ".join(suite.notes["missing"][:6])
                         + (" ..." if len(suite.notes["missing"]) > 6 else "") + ")")
    _emit(args, payload, "\n".join(lines))
    ok = exclusive and exhaust <= 1e-10 and (suite is None or suite.ok)
    return EXIT_OK if ok else EXIT_INCONSISTENT


def load_psg(path) -> tuple[FinitePsg, dict | None, FinitePsg | None]:
    data = read_json(path)
    errors = []
    try:
        p = FinitePsg.from_triples(data["elements"], data.get("table", []))
        sigma = support = None
        if "sigma" in data:
            sigma = dict(data["sigma"])
            s = data["support"]
            support = FinitePsg.from_triples(s["elements"], s.get("table", []))
        return p, sigma, support
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"psg table: {exc}")
    raise ScenarioValidationError(errors)


def cmd_psg_validate(args) -> int:
    p, sigma, support = load_psg(args.table)
    report = validate_finite_psg(p)
    payload = {"psg": report.as_dict()}
    lines = [f"elements: {len(p.elements)}, defined products: {len(p.table)}",
             "associativity: " + ("ok" if report.notes["associative"] else "VIOLATED"),
             f"unit: {report.notes['unit']}, absorbing: {report.notes['absorbing']}",
             f"nuclear: {', '.join(map(str, report.notes['nuclear']))}",
             f"directed: {'yes' if report.notes['directed'] else 'no'}"]
    lines += [f"  {i}" for i in report.issues]
    ok = report.ok
    if sigma is not None:
        caus = check_causality(p, sigma, support)
        payload["causality"] = caus.as_dict()
        lines.append("causality: " + ("ok (holds on supplied table)" if caus.ok else "VIOLATED"))
        lines += [f"  {i}" for i in caus.issues]
        ok = ok and caus.ok
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if ok else EXIT_INCONSISTENT


def spin_half_family(n0, n, nprime, times=(1.0, 2.0)) -> HistoryFamily:
    """The free spin-1/2 family: S.n' asked at t1, S.n at t2, prepared along n0."""
    return product_family(TemporalSupport(times),
                          [spin_decomposition(nprime), spin_decomposition(n)],
                          Dynamics.free(2, reference_time=0.0), bloch_state(n0),
                          name="spin-half example")


def cross_product_lhs(n0, n, nprime) -> float:
    """(n x n').(n0 x n'); the interference Re d((+,+),(-,+)) equals a quarter of it."""
    return float(np.dot(np.cross(n, nprime), np.cross(n0, nprime)))


def cmd_example_spin_half(args) -> int:
    n0, n, npr = (unit_axis(_axis(v)) for v in (args.n0, args.n, args.nprime))
    show = {k: [float(x) for x in v] for k, v in (("n0", n0), ("n", n), ("nprime", npr))}
    family = spin_half_family(n0, n, npr)
    dm = decoherence_matrix(family)
    report = check_consistency(dm, args.condition, args.tol)
    lhs = cross_product_lhs(n0, n, npr)
    re_d = dm((0, 0), (1, 0)).real
    analytic = abs(lhs) / 4 <= args.tol
    agree = analytic == report.consistent
    names = [label_name(family, l) for l in dm.labels]
    lines = [f"n0 = {show['n0']}, n = {show['n']}, n' = {show['nprime']}",
             f"(n x n').(n0 x n') = {fmt_real(lhs, MATRIX_DIGITS)}",
             f"Re d((+,+),(-,+))  = {fmt_real(re_d, MATRIX_DIGITS)}  (analytic: lhs/4 = {fmt_real(lhs / 4, MATRIX_DIGITS)})",
             f"decoherence matrix:\n{render_matrix(names, dm.entries)}",
             _consistency_text(family, report),
             f"analytic verdict: {'consistent' if analytic else 'inconsistent'}; "
             f"verdicts agree: {'yes' if agree else 'NO'}"]
    payload = {"axes": show, "cross_product_lhs": lhs,
               "re_d_alpha_beta": re_d, "decoherence_matrix": matrix_payload(family, dm),
               "consistency": _report_payload(family, report), "analytic_consistent": analytic,
               "verdicts_agree": agree}
    if report.consistent:
        table = probabilities(dm, args.condition, args.tol)
        lines.append(_probability_text(family, table))
        payload["probabilities"] = _probability_payload(family, table)
    _emit(args, payload, "\n".join(lines))
    if not agree:
        print("error: analytic and numerical verdicts disagree", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def _axis(text: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"axis must be three comma-separated numbers, got {text!r}")
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"axis must have three components, got {text!r}")
    return vals


# ----------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "structured"), default="table")
    common.add_argument("--condition", choices=("weak", "medium"), default="weak")
    common.add_argument("--tol", type=float, default=DEFAULT_EPSILON, metavar="EPS",
                        help="decoherence threshold epsilon (default %(default)g)")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("scenario", help="scenario JSON file or builtin:<name>")
    scen.add_argument("--final-state", action="store_true",
                      help="use the time-symmetric functional with the scenario's final state")

    parser = argparse.ArgumentParser(prog="conhist", description="Consistent-histories analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common, scen], help="load and validate a scenario"
                   ).set_defaults(func=cmd_validate)
    sub.add_parser("decoherence-matrix", parents=[common, scen], help="print d(alpha, beta)"
                   ).set_defaults(func=cmd_decoherence_matrix)
    sub.add_parser("consistency", parents=[common, scen], help="check a decoherence condition"
                   ).set_defaults(func=cmd_consistency)
    sub.add_parser("probabilities", parents=[common, scen], help="assign history probabilities"
                   ).set_defaults(func=cmd_probabilities)
    sub.add_parser("hpo", parents=[common, scen], help="history projection operators"
                   ).set_defaults(func=cmd_hpo)
    p = sub.add_parser("compat", parents=[common], help="compare two families")
    p.add_argument("scenario_a")
    p.add_argument("scenario_b")
    p.set_defaults(func=cmd_compat)
    p = sub.add_parser("psg-validate", parents=[common], help="check a finite partial semigroup table")
    p.add_argument("table", help="composition-table JSON file or builtin:<name>")
    p.set_defaults(func=cmd_psg_validate)
    ex = sub.add_parser("example", help="built-in worked examples")
    exsub = ex.add_subparsers(dest="example", required=True)
    p = exsub.add_parser("spin-half", parents=[common], help="free spin-1/2 with three axes")
    p.add_argument("--n0", default="0,0,1", help="preparation axis (default z)")
    p.add_argument("--n", default="0,0,1", help="axis asked at t2 (default z)")
    p.add_argument("--nprime", default="0,0,1", help="axis asked at t1 (default z)")
    p.set_defaults(func=cmd_example_spin_half)
    return parser


def _error(args, code: int, kind: str, message: str, details=None) -> int:
    payload = {"error": kind, "message": message, "exit_code": code}
    if details:
        payload["details"] = details
    if getattr(args, "format", "table") == "structured":
        print(json.dumps(payload, indent=1))
    else:
        print(f"error: {message}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        return _error(args, EXIT_IO, "parse", str(exc),
                      {"line": exc.line, "column": exc.column} if exc.line else None)
    except ScenarioValidationError as exc:
        return _error(args, EXIT_INVALID, "validation", str(exc), exc.errors)
    except HistoriesError as exc:
        return _error(args, EXIT_INVALID, type(exc).__name__, str(exc))
    except OSError as exc:
        return _error(args, EXIT_IO, "io", str(exc))


if __name__ == "__main__":
    sys.exit(main())
