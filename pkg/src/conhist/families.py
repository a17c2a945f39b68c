"""Refinement, compatibility and complementarity between history families."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

from .decoherence import DEFAULT_EPSILON, Condition, ConsistencyReport, check_consistency, decoherence_matrix
from .errors import DomainError, InconsistentFamilyError, UnsupportedStructureError
from .histories import HistoryFamily, TemporalSupport, product_family
from .kinematics import DecompositionOfUnity, Projector
from .matrix_core import DEFAULT_TOL, Tolerance, close, commutator, max_norm

Relation = Literal["refines", "coarsens", "compatible", "incompatible", "complementary"]


def _require_product(*families: HistoryFamily):
    for f in families:
        if not f.is_product:
            raise UnsupportedStructureError(
                "refinement is defined here for product families with one decomposition per time")


def _time_index(times, t, tol: Tolerance) -> int | None:
    for i, s in enumerate(times):
        if tol.accepts(abs(s - t), abs(t)):
            return i
    return None


def _is_finer(fine: DecompositionOfUnity, coarse: DecompositionOfUnity, tol: Tolerance) -> bool:
    """Every projector of ``coarse`` is a sum of projectors of ``fine``."""
    for p in coarse:
        inside = [q.matrix for q in fine if close(p.matrix @ q.matrix, q.matrix, tol)]
        if not inside or not close(sum(inside), p.matrix, tol):
            return False
    return True


def is_refinement(g: HistoryFamily, f: HistoryFamily, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when supp(g) contains supp(f) and g is at least as fine at every time of f."""
    _require_product(g, f)
    for j, t in enumerate(f.support.times):
        i = _time_index(g.support.times, t, tol)
        if i is None:
            return False
        if not _is_finer(g.decompositions[i], f.decompositions[j], tol):
            return False
    return True


@dataclass(frozen=True)
class Obstruction:
    """First non-commuting projector pair blocking a common refinement."""

    time: float
    first: str
    second: str
    commutator_norm: float

    def __str__(self) -> str:
        return (f"at t={self.time:g}: projector {self.first!r} of the first family does not commute "
                f"with {self.second!r} of the second (|[P, Q]| = {self.commutator_norm:.3e})")


def _check_same_kinematics(f1: HistoryFamily, f2: HistoryFamily, tol: Tolerance):
    if f1.dim != f2.dim:
        raise DomainError(f"families act on different dimensions ({f1.dim} vs {f2.dim})")
    if not f1.dynamics.same_as(f2.dynamics, tol):
        raise DomainError("families have different dynamics")
    if not close(f1.initial_state.matrix, f2.initial_state.matrix, tol):
        raise DomainError("families have different initial states")


def find_obstruction(f1: HistoryFamily, f2: HistoryFamily,
                     tol: Tolerance = DEFAULT_TOL) -> Obstruction | None:
    _require_product(f1, f2)
    for j, t in enumerate(f1.support.times):
        i = _time_index(f2.support.times, t, tol)
        if i is None:
            continue
        for p in f1.decompositions[j]:
            for q in f2.decompositions[i]:
                c = max_norm(commutator(p.matrix, q.matrix))
                if not tol.accepts(c, 1.0):
                    return Obstruction(t, p.label, q.label, c)
    return None


def _same_decomposition(a: DecompositionOfUnity, b: DecompositionOfUnity, tol: Tolerance) -> bool:
    return len(a) == len(b) and all(close(p.matrix, q.matrix, tol) for p, q in zip(a, b))


def common_refinement(f1: HistoryFamily, f2: HistoryFamily,
                      tol: Tolerance = DEFAULT_TOL) -> HistoryFamily | None:
    """Canonical common refinement from products PQ, or None if some pair fails to commute.

    Zero products are left out of the refined decomposition; the dropped
    combinations are recorded in ``impossible`` as (time, first, second) name triples.
    """
    _require_product(f1, f2)
    _check_same_kinematics(f1, f2, tol)
    if find_obstruction(f1, f2, tol) is not None:
        return None
    times = sorted(set(f1.support.times) | set(f2.support.times))
    merged: list[float] = []
    for t in times:
        if not merged or _time_index(merged, t, tol) is None:
            merged.append(t)
    decomps = []
    impossible = []
    for t in merged:
        i = _time_index(f1.support.times, t, tol)
        k = _time_index(f2.support.times, t, tol)
        if k is None:
            decomps.append(f1.decompositions[i])
            continue
        if i is None:
            decomps.append(f2.decompositions[k])
            continue
        d1, d2 = f1.decompositions[i], f2.decompositions[k]
        if _same_decomposition(d1, d2, tol):
            decomps.append(d1)
            continue
        projs = []
        for p in d1:
            for q in d2:
                m = p.matrix @ q.matrix
                name = f"{p.label}&{q.label}"
                if max_norm(m) <= tol.abs_eps + tol.rel_eps:
                    impossible.append((t, p.label, q.label))
                    continue
                projs.append(Projector(0.5 * (m + m.conj().T), name))
        decomps.append(DecompositionOfUnity(tuple(projs), t))
    if len(merged) == len(f1.support) and all(
            _same_decomposition(a, b, tol) for a, b in zip(decomps, f1.decompositions)):
        return f1
    out = product_family(TemporalSupport(tuple(merged)), decomps, f1.dynamics, f1.initial_state,
                         f1.final_state, tol, name=f"{f1.name}^{f2.name}" if f1.name or f2.name else "")
    return replace(out, impossible=tuple(impossible))


@dataclass
class FamilyRelationReport:
    relation: Relation
    witness: HistoryFamily | None = None
    obstruction: str | None = None
    note: str = ""

    @property
    def compatible(self) -> bool:
        return self.relation in ("refines", "coarsens", "compatible")

    def as_dict(self) -> dict:
        return {
            "relation": self.relation,
            "compatible": self.compatible,
            "witness_size": None if self.witness is None else len(self.witness),
            "witness_support": None if self.witness is None else list(self.witness.support.times),
            "obstruction": self.obstruction,
            "note": self.note,
        }


def _consistency(f: HistoryFamily, condition: Condition, epsilon: float,
                 tol: Tolerance) -> ConsistencyReport:
    return check_consistency(decoherence_matrix(f, tol), condition, epsilon)


def are_compatible(f1: HistoryFamily, f2: HistoryFamily, condition: Condition = "weak",
                   epsilon: float = DEFAULT_EPSILON,
                   tol: Tolerance = DEFAULT_TOL) -> FamilyRelationReport:
    """Decide whether two consistent families admit a common consistent refinement.

    "complementary" is a structural verdict: both inputs are consistent and a
    shared support time carries non-commuting decompositions.  It does not
    claim that the two families describe the same physical process.
    """
    _require_product(f1, f2)
    _check_same_kinematics(f1, f2, tol)
    for which, f in (("first", f1), ("second", f2)):
        rep = _consistency(f, condition, epsilon, tol)
        if not rep.consistent:
            raise InconsistentFamilyError(rep, f"{which} family is not {condition}-consistent")

    fine1 = is_refinement(f1, f2, tol)
    fine2 = is_refinement(f2, f1, tol)
    if fine1 and fine2:
        return FamilyRelationReport("compatible", f1, note="families are equally fine")
    if fine1:
        return FamilyRelationReport("refines", f1, note="first family refines the second")
    if fine2:
        return FamilyRelationReport("coarsens", f2, note="first family coarsens the second")

    obstruction = find_obstruction(f1, f2, tol)
    if obstruction is not None:
        return FamilyRelationReport(
            "complementary", None, str(obstruction),
            note="both families are consistent but no common refinement exists "
                 "(structural complementarity)")
    witness = common_refinement(f1, f2, tol)
    rep = _consistency(witness, condition, epsilon, tol)
    if rep.consistent:
        return FamilyRelationReport("compatible", witness, note="common refinement is consistent")
    (a, b), r = max(rep.violations, key=lambda v: v[1])
    return FamilyRelationReport(
        "incompatible", None,
        f"common refinement violates {condition} decoherence at pair {a}, {b} "
        f"(residual {r:.3e})")
