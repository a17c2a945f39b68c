"""History projection operators on the n-fold tensor product and the orthoalgebra of propositions.

A history (P_1, ..., P_n) becomes the projector P_1 (x) ... (x) P_n on H^(x)n.
Homogeneity is tracked by construction: an :class:`HpoProjector` knows whether
it was built as one tensor product, as an orthogonal sum of such products, or
only as a matrix (``kind="opaque"``).  No attempt is made to factorize a raw matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import combinations, product
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .histories import History, HistoryFamily
from .kinematics import HilbertSpace
from .matrix_core import DEFAULT_TOL, Tolerance, close, frozen, identity, is_projector, max_norm
from .validation import ValidationReport

MAX_HPO_DIM = 4096

Slots = tuple[np.ndarray, ...]


def _tensor(slots: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, slots)


@dataclass(frozen=True, eq=False)
class HpoProjector:
    matrix: np.ndarray
    n_slots: int
    slot_dim: int
    kind: Literal["homogeneous", "sum", "opaque"]
    terms: tuple[Slots, ...] = ()
    negation_of: "HpoProjector | None" = None

    def __post_init__(self):
        total = self.slot_dim ** self.n_slots
        if total > MAX_HPO_DIM:
            raise DomainError(f"HPO space dimension {self.slot_dim}^{self.n_slots} = {total} "
                              f"exceeds the cap of {MAX_HPO_DIM}")
        if self.matrix.shape != (total, total):
            raise ShapeError(f"matrix shape {self.matrix.shape} does not match {total}")
        object.__setattr__(self, "matrix", frozen(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def slots(self) -> Slots:
        if self.kind != "homogeneous":
            raise DomainError("only homogeneous HPOs have slot projectors")
        return self.terms[0]


def hpo_homogeneous(slots: Sequence) -> HpoProjector:
    """P_1 (x) ... (x) P_n from per-slot projector matrices."""
    slots = tuple(frozen(np.asarray(s, dtype=np.complex128)) for s in slots)
    if not slots:
        raise DomainError("an HPO needs at least one slot")
    d = slots[0].shape[0]
    if any(s.shape != (d, d) for s in slots):
        raise ShapeError("all slots must act on the same Hilbert space")
    for k, s in enumerate(slots):
        if not is_projector(s):
            raise DomainError(f"slot {k} is not a projector")
    if d ** len(slots) > MAX_HPO_DIM:
        raise DomainError(f"HPO space dimension {d}^{len(slots)} exceeds the cap of {MAX_HPO_DIM}")
    return HpoProjector(_tensor(slots), len(slots), d, "homogeneous", (slots,))


def hpo_sum(terms: Sequence[Slots], n_slots: int, slot_dim: int,
            tol: Tolerance = DEFAULT_TOL) -> HpoProjector:
    """Orthogonal sum of homogeneous terms (the zero projector when ``terms`` is empty)."""
    mats = [_tensor(t) for t in terms]
    for (i, a), (j, b) in combinations(enumerate(mats), 2):
        r = max_norm(a @ b)
        if not tol.accepts(r, 1.0):
            raise DomainError(f"terms {i} and {j} are not orthogonal (|AB| = {r:.3e})")
    total = slot_dim ** n_slots
    m = sum(mats) if mats else np.zeros((total, total), dtype=np.complex128)
    return HpoProjector(m, n_slots, slot_dim, "sum", tuple(tuple(t) for t in terms))


def hpo_embed(history: History, space: HilbertSpace) -> HpoProjector:
    """Schrodinger-picture projectors of ``history`` placed slot by slot in time order."""
    slots = [p.matrix for p in history.projectors]
    for k, s in enumerate(slots):
        if s.shape != (space.dim, space.dim):
            raise ShapeError(f"event {k} acts on dimension {s.shape[0]}, expected {space.dim}")
    return hpo_homogeneous(slots)


def hpo_identity(n_slots: int, slot_dim: int) -> HpoProjector:
    return hpo_homogeneous([identity(slot_dim)] * n_slots)


def hpo_zero(n_slots: int, slot_dim: int) -> HpoProjector:
    return hpo_sum((), n_slots, slot_dim)


def negation_terms(slots: Slots) -> list[Slots]:
    """The 2^n - 1 slot patterns over {P_j, I - P_j} other than (P_1, ..., P_n)."""
    d = slots[0].shape[0]
    choices = [(s, identity(d) - s) for s in slots]
    return [tuple(c[b] for c, b in zip(choices, bits))
            for bits in product((0, 1), repeat=len(slots)) if any(bits)]


def hpo_negate(p: HpoProjector) -> HpoProjector:
    """I - p; a homogeneous p expands into 2^n - 1 mutually orthogonal homogeneous terms."""
    if p.negation_of is not None:
        return p.negation_of
    comp = identity(p.dim) - p.matrix
    if p.kind == "homogeneous":
        return HpoProjector(comp, p.n_slots, p.slot_dim, "sum", tuple(negation_terms(p.slots)), p)
    if p.kind == "sum" and not p.terms:
        ident = hpo_identity(p.n_slots, p.slot_dim)
        return HpoProjector(ident.matrix, p.n_slots, p.slot_dim, "homogeneous", ident.terms, p)
    return HpoProjector(comp, p.n_slots, p.slot_dim, "opaque", (), p)


@dataclass(frozen=True, eq=False)
class HistoryProposition:
    hpo: HpoProjector
    label: str = ""

    @property
    def matrix(self) -> np.ndarray:
        return self.hpo.matrix


def zero_proposition(n_slots: int, slot_dim: int) -> HistoryProposition:
    return HistoryProposition(hpo_zero(n_slots, slot_dim), "0")


def unit_proposition(n_slots: int, slot_dim: int) -> HistoryProposition:
    return HistoryProposition(hpo_identity(n_slots, slot_dim), "1")


def _same_shape(a: HistoryProposition, b: HistoryProposition):
    if (a.hpo.n_slots, a.hpo.slot_dim) != (b.hpo.n_slots, b.hpo.slot_dim):
        raise ShapeError(f"propositions live on different spaces: {a.hpo.slot_dim}^{a.hpo.n_slots} "
                         f"vs {b.hpo.slot_dim}^{b.hpo.n_slots}")


def prop_leq(a: HistoryProposition, b: HistoryProposition, tol: Tolerance = DEFAULT_TOL) -> bool:
    """a implies b: ab = ba = a."""
    _same_shape(a, b)
    ab = a.matrix @ b.matrix
    ba = b.matrix @ a.matrix
    return close(ab, a.matrix, tol) and close(ba, a.matrix, tol)


def prop_disjoint(a: HistoryProposition, b: HistoryProposition, tol: Tolerance = DEFAULT_TOL) -> bool:
    _same_shape(a, b)
    return tol.accepts(max_norm(a.matrix @ b.matrix), 1.0)


def prop_negate(a: HistoryProposition) -> HistoryProposition:
    return HistoryProposition(hpo_negate(a.hpo), f"not({a.label})" if a.label else "")


def _terms_of(p: HpoProjector):
    if p.kind == "homogeneous":
        return p.terms
    if p.kind == "sum":
        return p.terms
    return None


def prop_ojoin(a: HistoryProposition, b: HistoryProposition,
               tol: Tolerance = DEFAULT_TOL) -> HistoryProposition:
    """Disjoint join: the sum of two orthogonal projectors."""
    if not prop_disjoint(a, b, tol):
        raise DomainError(f"cannot join {a.label or 'a'} and {b.label or 'b'}: not disjoint")
    ta, tb = _terms_of(a.hpo), _terms_of(b.hpo)
    label = f"{a.label} + {b.label}" if a.label and b.label else ""
    m = a.matrix + b.matrix
    if ta is None or tb is None:
        h = HpoProjector(m, a.hpo.n_slots, a.hpo.slot_dim, "opaque")
    else:
        h = HpoProjector(m, a.hpo.n_slots, a.hpo.slot_dim, "sum", tuple(ta) + tuple(tb))
    return HistoryProposition(h, label)


def orthoalgebra_axiom_suite(props: Iterable[HistoryProposition],
                             tol: Tolerance = DEFAULT_TOL) -> ValidationReport:
    """Check the orthoalgebra laws on a finite set of propositions.

    Elements that an axiom needs but the set lacks are listed under
    ``notes["missing"]`` rather than reported as violations.
    """
    props = list(props)
    report = ValidationReport()
    missing: list[str] = []
    if not props:
        report.notes["missing"] = missing
        return report
    n, d = props[0].hpo.n_slots, props[0].hpo.slot_dim
    for p in props:
        _same_shape(props[0], p)
    names = [p.label or f"#{i}" for i, p in enumerate(props)]
    valid = []
    for name, p in zip(names, props):
        if not is_projector(p.matrix, tol):
            report.add("projector", name, message="not a Hermitian idempotent")
        else:
            valid.append((name, p))
    one = identity(d ** n)
    zero = np.zeros_like(one)

    def member(m) -> str | None:
        for name, p in valid:
            if close(p.matrix, m, tol):
                return name
        return None

    if member(zero) is None:
        missing.append("0")
    if member(one) is None:
        missing.append("1")

    for name, p in valid:
        m = p.matrix
        # 0 <= a <= 1
        if not close(m @ one, m, tol):
            report.add("bounds", f"{name} <= 1")
        # negation: unique complement inside the set, and not(not a) = a
        comps = [cn for cn, c in valid
                 if prop_disjoint(p, c, tol) and close(m + c.matrix, one, tol)]
        if len(comps) > 1:
            report.add("negation", name, message=f"complement not unique: {comps}")
        elif not comps:
            missing.append(f"not({name})")
        neg = prop_negate(p)
        if not close(prop_negate(neg).matrix, m, tol):
            report.add("double_negation", name)
        if not close(prop_ojoin(p, neg, tol).matrix, one, tol):
            report.add("negation", name, message="a (+) not a != 1")

    for (na, a), (nb, b) in product(valid, repeat=2):
        if a is b:
            continue
        if prop_disjoint(a, b, tol):
            ab = prop_ojoin(a, b, tol)
            ba = prop_ojoin(b, a, tol)
            if not close(ab.matrix, ba.matrix, tol):
                report.add("commutativity", f"{na} (+) {nb}")
            if not is_projector(ab.matrix, tol):
                report.add("projector", f"{na} (+) {nb}")
        leq = prop_leq(a, b, tol)
        gap = b.matrix - a.matrix
        gap_ok = is_projector(gap, tol) and tol.accepts(max_norm(a.matrix @ gap), 1.0)
        if leq != gap_ok:
            report.add("order", f"{na} <= {nb}",
                       message=f"a <= b is {leq} but b - a is {'a' if gap_ok else 'not a'} disjoint projector")
        if leq and gap_ok and member(gap) is None:
            missing.append(f"{nb} - {na}")

    for (na, a), (nb, b), (nc, c) in product(valid, repeat=3):
        if len({id(a), id(b), id(c)}) < 3:
            continue
        if not (prop_disjoint(a, b, tol) and prop_disjoint(b, c, tol) and prop_disjoint(a, c, tol)):
            continue
        left = prop_ojoin(prop_ojoin(a, b, tol), c, tol)
        right = prop_ojoin(a, prop_ojoin(b, c, tol), tol)
        if not close(left.matrix, right.matrix, tol):
            report.add("associativity", f"({na} (+) {nb}) (+) {nc}")

    report.notes["missing"] = sorted(set(missing))
    return report


def chain_of_proposition(family: HistoryFamily, labels: Sequence) -> np.ndarray:
    """C_gamma = sum of the chain operators of the listed (distinct) histories."""
    labels = [tuple(l) for l in labels]
    if len(set(labels)) != len(labels):
        raise DomainError("labels of a disjoint join must be distinct")
    if not labels:
        return np.zeros((family.dim, family.dim), dtype=np.complex128)
    for l in labels:
        family[l]
    return sum(family.chain_operators[l] for l in labels)


def family_propositions(family: HistoryFamily) -> list[HistoryProposition]:
    """Embed every history of a family as a proposition on H^(x)n."""
    space = HilbertSpace(family.dim)
    return [HistoryProposition(hpo_embed(h, space), ",".join(family.branch_names(lab)))
            for lab, h in family.histories.items()]
