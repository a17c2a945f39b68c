"""Decoherence functionals, consistency conditions and probability assignment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import (
    DegeneratePosteriorError,
    DomainError,
    InconsistentFamilyError,
    IncompleteFamilyError,
    UnknownLabelError,
)
from .histories import HistoryFamily, Label, completeness_check
from .kinematics import propagator
from .matrix_core import DEFAULT_TOL, Tolerance, hermiticity_residual, max_norm
from .validation import ValidationReport

Condition = Literal["weak", "medium"]
DEFAULT_EPSILON = 1e-8
PSD_FLOOR = -1e-9


@dataclass(frozen=True, eq=False)
class DecoherenceMatrix:
    labels: tuple[Label, ...]
    entries: np.ndarray
    kind: Literal["standard", "time_symmetric"] = "standard"

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.complex128)
        if e.shape != (len(self.labels), len(self.labels)):
            raise DomainError(f"entries shape {e.shape} does not match {len(self.labels)} labels")
        object.__setattr__(self, "labels", tuple(tuple(l) for l in self.labels))
        object.__setattr__(self, "entries", e)

    @property
    def index(self) -> dict[Label, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def __call__(self, alpha, beta) -> complex:
        idx = self.index
        try:
            return complex(self.entries[idx[tuple(alpha)], idx[tuple(beta)]])
        except KeyError as exc:
            raise UnknownLabelError(f"label {exc.args[0]!r} not in decoherence matrix") from None

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).real.copy()

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(h).min())


def _require_complete(family: HistoryFamily, tol: Tolerance):
    residual = completeness_check(family)
    if not tol.accepts(residual, 1.0):
        raise IncompleteFamilyError(residual)


def _stacked_chains(family: HistoryFamily) -> tuple[list[Label], np.ndarray]:
    labels = family.labels
    return labels, np.stack([family.chain_operators[l] for l in labels])


def decoherence_matrix(family: HistoryFamily, tol: Tolerance = DEFAULT_TOL) -> DecoherenceMatrix:
    """d(alpha, beta) = Tr(C_alpha rho C_beta^dag) over every pair of the family."""
    _require_complete(family, tol)
    labels, chains = _stacked_chains(family)
    rho = family.initial_state.matrix
    left = chains @ rho
    # Tr(X C^dag) = sum_ij X_ij conj(C_ij)
    d = np.einsum("aij,bij->ab", left, chains.conj())
    return DecoherenceMatrix(tuple(labels), d, "standard")


def time_symmetric_decoherence_matrix(family: HistoryFamily,
                                      tol: Tolerance = DEFAULT_TOL) -> DecoherenceMatrix:
    """d(alpha, beta) = N Tr(rho_f C_alpha rho_in C_beta^dag), N normalizing the entry sum to 1."""
    if family.final_state is None:
        raise DomainError("time-symmetric decoherence functional needs a final state")
    _require_complete(family, tol)
    labels, chains = _stacked_chains(family)
    rho_in = family.initial_state.matrix
    rho_f = family.final_state.matrix
    left = rho_f @ chains @ rho_in
    raw = np.einsum("aij,bij->ab", left, chains.conj())
    total = raw.sum()
    if abs(total) <= tol.abs_eps:
        raise DegeneratePosteriorError(
            f"normalization sum Tr(rho_f rho_in) = {total:.3e} vanishes; "
            "final and initial states are orthogonal")
    return DecoherenceMatrix(tuple(labels), raw / total, "time_symmetric")


@dataclass
class ConsistencyReport:
    condition: Condition
    epsilon: float
    violations: list[tuple[tuple[Label, Label], float]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.violations

    @property
    def worst(self) -> float:
        return max((r for _, r in self.violations), default=0.0)

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "epsilon": self.epsilon,
            "consistent": self.consistent,
            "violations": [
                {"alpha": list(a), "beta": list(b), "residual": r} for (a, b), r in self.violations
            ],
        }


def _pair_residuals(dm: DecoherenceMatrix, condition: Condition) -> np.ndarray:
    if condition == "weak":
        return np.abs(dm.entries.real)
    if condition == "medium":
        return np.abs(dm.entries)
    raise DomainError(f"unknown decoherence condition {condition!r}; use 'weak' or 'medium'")


def check_consistency(dm: DecoherenceMatrix, condition: Condition = "weak",
                      epsilon: float = DEFAULT_EPSILON) -> ConsistencyReport:
    """Flag pairs whose interference exceeds epsilon * max(1, sqrt(d_aa d_bb))."""
    if not (epsilon >= 0 and np.isfinite(epsilon)):
        raise DomainError(f"epsilon must be finite and nonnegative, got {epsilon!r}")
    res = _pair_residuals(dm, condition)
    diag = np.clip(dm.diagonal, 0.0, None)
    scale = np.maximum(1.0, np.sqrt(np.outer(diag, diag)))
    report = ConsistencyReport(condition, float(epsilon))
    n = len(dm.labels)
    for i in range(n):
        for j in range(i + 1, n):
            if res[i, j] > epsilon * scale[i, j]:
                report.violations.append(((dm.labels[i], dm.labels[j]), float(res[i, j])))
    return report


@dataclass
class ProbabilityTable:
    entries: dict[Label, float]
    condition: Condition
    epsilon: float
    sum_residual: float
    sum_rule_residual: float

    def __getitem__(self, label) -> float:
        return self.entries[tuple(label)]

    @property
    def total(self) -> float:
        return float(sum(self.entries.values()))

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "epsilon": self.epsilon,
            "probabilities": [{"label": list(k), "p": v} for k, v in self.entries.items()],
            "sum": self.total,
            "sum_residual": self.sum_residual,
            "sum_rule_residual": self.sum_rule_residual,
        }


def probabilities(dm: DecoherenceMatrix, condition: Condition = "weak",
                  epsilon: float = DEFAULT_EPSILON,
                  tol: Tolerance = DEFAULT_TOL) -> ProbabilityTable:
    """p(alpha) = d(alpha, alpha), refused unless the family decoheres.

    ``sum_rule_residual`` is the worst |p(alpha or beta) - p(alpha) - p(beta)|
    over pairs, i.e. max |2 Re d(alpha, beta)|, the amount by which the
    approximate consistency lets additivity fail.
    """
    report = check_consistency(dm, condition, epsilon)
    if not report.consistent:
        raise InconsistentFamilyError(report)
    diag = dm.diagonal
    if diag.min() < -tol.abs_eps or diag.max() > 1 + tol.abs_eps:
        raise DomainError(f"diagonal outside [0, 1]: min {diag.min():.3e}, max {diag.max():.3e}")
    clamped = np.clip(diag, 0.0, 1.0)
    off = dm.entries.real.copy()
    np.fill_diagonal(off, 0.0)
    return ProbabilityTable(
        {lab: float(p) for lab, p in zip(dm.labels, clamped)},
        condition,
        float(epsilon),
        sum_residual=float(abs(clamped.sum() - 1.0)),
        sum_rule_residual=float(2 * max_norm(off)) if len(dm.labels) > 1 else 0.0,
    )


@dataclass(frozen=True)
class InterferenceRecord:
    p_alpha: float
    p_beta: float
    cross: float
    p_or: float

    @property
    def residual(self) -> float:
        """p(alpha or beta) - p(alpha) - p(beta); equals ``cross`` analytically."""
        return self.p_or - self.p_alpha - self.p_beta


def interference_decomposition(family: HistoryFamily, label_alpha, label_beta,
                               tol: Tolerance = DEFAULT_TOL) -> InterferenceRecord:
    """Split p(alpha or beta) into the two probabilities plus 2 Re d(alpha, beta).

    The histories must differ at exactly one time, by orthogonal projectors.
    """
    a, b = tuple(label_alpha), tuple(label_beta)
    if a == b:
        raise DomainError("alpha and beta must be distinct histories")
    ha, hb = family[a], family[b]
    differing = [
        j for j, (ea, eb) in enumerate(zip(ha.events, hb.events))
        if not tol.accepts(max_norm(ea.projector.matrix - eb.projector.matrix), 1.0)
    ]
    if len(differing) != 1:
        raise DomainError(f"histories differ at {len(differing)} times; exactly one is required")
    j = differing[0]
    overlap = max_norm(ha.events[j].projector.matrix @ hb.events[j].projector.matrix)
    if not tol.accepts(overlap, 1.0):
        raise DomainError(f"projectors at t={ha.times[j]} are not orthogonal (|PQ| = {overlap:.3e})")
    rho = family.initial_state.matrix
    ca, cb = family.chain_operators[a], family.chain_operators[b]

    def d(x, y) -> complex:
        return complex(np.trace(x @ rho @ y.conj().T))

    cg = ca + cb
    return InterferenceRecord(
        p_alpha=d(ca, ca).real,
        p_beta=d(cb, cb).real,
        cross=2 * d(ca, cb).real,
        p_or=d(cg, cg).real,
    )


_COLLAPSE_FLOOR = 1e-300


def collapse_oracle(family: HistoryFamily, label) -> float:
    """Probability of a history by sequential measurement and state reduction.

    Each pure component of the initial ensemble is evolved in the Schrodinger
    picture between event times, projected, and renormalized; the conditional
    probabilities are multiplied and the components are averaged with their
    weights.  This path never forms a chain operator.
    """
    h = family[tuple(label)]
    weights, vectors = np.linalg.eigh(family.initial_state.matrix)
    total = 0.0
    for w, phi in zip(weights, vectors.T):
        if w <= 0.0:
            continue
        psi = phi
        t_prev = family.dynamics.reference_time
        joint = 1.0
        for ev in h.events:
            psi = propagator(family.dynamics, t_prev, ev.time) @ psi
            projected = ev.projector.matrix @ psi
            p = float(np.vdot(projected, projected).real)
            if p <= _COLLAPSE_FLOOR:
                joint = 0.0
                break
            joint *= p
            psi = projected / np.sqrt(p)
            t_prev = ev.time
        total += w * joint
    return float(total)


def validate_generalized_functional(dm: DecoherenceMatrix,
                                    coarse_graining: Mapping[Label, Sequence[Label]] | Sequence[Sequence[Label]],
                                    coarse: DecoherenceMatrix | None = None,
                                    tol: Tolerance = DEFAULT_TOL) -> ValidationReport:
    """Check hermiticity, positivity, normalization and biadditivity of ``dm``.

    ``coarse_graining`` maps each coarse label to the fine labels it contains
    (a plain sequence of blocks gets labels ``(0,), (1,), ...``).  Biadditivity
    compares block sums of ``dm`` against ``coarse`` when it is given (an
    independently computed functional on the coarse family) and otherwise
    checks the block-summed matrix against the first three axioms.
    """
    if isinstance(coarse_graining, Mapping):
        blocks = {tuple(k): [tuple(x) for x in v] for k, v in coarse_graining.items()}
    else:
        blocks = {(i,): [tuple(x) for x in v] for i, v in enumerate(coarse_graining)}
    idx = dm.index
    seen = [l for v in blocks.values() for l in v]
    unknown = [l for l in seen if l not in idx]
    if unknown or sorted(seen) != sorted(dm.labels):
        raise DomainError("coarse-graining is not a partition of the functional's labels"
                          + (f" (unknown {unknown[:3]})" if unknown else ""))

    report = ValidationReport()
    _axioms_i_to_iii(dm.entries, report, tol, "")

    coarse_labels = list(blocks)
    membership = np.zeros((len(coarse_labels), len(dm.labels)))
    for k, lab in enumerate(coarse_labels):
        for l in blocks[lab]:
            membership[k, idx[l]] = 1.0
    summed = membership @ dm.entries @ membership.T
    report.notes["coarse_labels"] = [list(l) for l in coarse_labels]
    if coarse is None:
        _axioms_i_to_iii(summed, report, tol, "block-summed ")
    else:
        cidx = coarse.index
        missing = [l for l in coarse_labels if l not in cidx]
        if missing:
            raise DomainError(f"coarse functional lacks labels {missing[:3]}")
        order = [cidx[l] for l in coarse_labels]
        other = coarse.entries[np.ix_(order, order)]
        r = max_norm(summed - other)
        if not tol.accepts(r, 1.0):
            report.add("biadditivity", "d(coarse) vs block sums of d(fine)", r)
        report.notes["biadditivity_residual"] = r
    return report


def _axioms_i_to_iii(d: np.ndarray, report: ValidationReport, tol: Tolerance, prefix: str):
    r = hermiticity_residual(d)
    if not tol.accepts(r, 1.0):
        report.add("hermiticity", prefix + "d(a,b) - d(b,a)*", r)
    diag = np.diag(d)
    low = float(diag.real.min())
    if low < -tol.abs_eps or max_norm(diag.imag) > tol.abs_eps:
        report.add("positivity", prefix + "d(a,a)", max(-low, max_norm(diag.imag)))
    r = abs(d.sum() - 1.0)
    if not tol.accepts(r, 1.0):
        report.add("normalization", prefix + "sum d(a,b) - 1", float(r))
