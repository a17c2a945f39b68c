"""Hilbert-space kinematics: states, dynamics, projectors and decompositions of unity.

Units have hbar = 1; a Hamiltonian is an energy and ``exp(-i H t)`` is the propagator.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .matrix_core import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    close,
    frozen,
    hermitian_expm,
    identity,
    is_density,
    is_hermitian,
    is_projector,
    max_norm,
    projector_residual,
    sigma_dot,
)
from .validation import ValidationReport


@dataclass(frozen=True)
class HilbertSpace:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"Hilbert space dimension must be a positive integer, got {self.dim!r}")


@dataclass(frozen=True, eq=False)
class Projector:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_matrix(self.matrix, square=True, name=f"projector {self.label!r}")
        if not is_projector(m):
            raise DomainError(
                f"projector {self.label!r} is not Hermitian idempotent "
                f"(residual {projector_residual(m):.3e})"
            )
        object.__setattr__(self, "matrix", frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def is_zero(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return max_norm(self.matrix) <= tol.abs_eps

    def complement(self) -> "Projector":
        return Projector(identity(self.dim) - self.matrix, f"not {self.label}" if self.label else "")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_matrix(self.matrix, square=True, name="density operator")
        if not is_density(m):
            raise DomainError(f"density operator {self.label!r} is not Hermitian, positive, trace one")
        object.__setattr__(self, "matrix", frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Dynamics:
    hamiltonian: np.ndarray
    reference_time: float = 0.0

    def __post_init__(self):
        h = as_matrix(self.hamiltonian, square=True, name="Hamiltonian")
        if not is_hermitian(h):
            raise DomainError("Hamiltonian must be Hermitian")
        object.__setattr__(self, "hamiltonian", frozen(h))
        object.__setattr__(self, "reference_time", float(self.reference_time))

    @classmethod
    def free(cls, dim: int, reference_time: float = 0.0) -> "Dynamics":
        return cls(np.zeros((dim, dim)), reference_time)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def same_as(self, other: "Dynamics", tol: Tolerance = DEFAULT_TOL) -> bool:
        return close(self.hamiltonian, other.hamiltonian, tol) and tol.accepts(
            abs(self.reference_time - other.reference_time), abs(other.reference_time)
        )


@dataclass(frozen=True, eq=False)
class DecompositionOfUnity:
    """Exclusive, exhaustive set of projectors at one time.

    Construction does not validate; use :func:`validate_decomposition` or
    :meth:`check`.  Families check every decomposition they are built from.
    """

    projectors: tuple[Projector, ...]
    time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "projectors", tuple(self.projectors))

    def __len__(self) -> int:
        return len(self.projectors)

    def __getitem__(self, i) -> Projector:
        return self.projectors[i]

    def __iter__(self):
        return iter(self.projectors)

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.label or str(i) for i, p in enumerate(self.projectors))

    def check(self, tol: Tolerance = DEFAULT_TOL) -> "DecompositionOfUnity":
        report = validate_decomposition(self, tol)
        if not report.ok:
            raise DomainError(f"invalid decomposition of unity:\n{report}")
        return self

    def is_trivial(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        """True for the one-element decomposition {I}."""
        return len(self) == 1 and close(self.projectors[0].matrix, identity(self.dim), tol)

    @classmethod
    def from_matrices(cls, matrices, names: Sequence[str] | None = None, time=None):
        names = list(names) if names is not None else [str(i) for i in range(len(matrices))]
        return cls(tuple(Projector(m, n) for m, n in zip(matrices, names)), time)


def propagator(dyn: Dynamics, t_from: float, t_to: float) -> np.ndarray:
    """U(t_to, t_from) = exp(-i H (t_to - t_from))."""
    dt = float(t_to) - float(t_from)
    if not np.isfinite(dt):
        raise DomainError("propagator times must be finite")
    if dt == 0.0:
        return identity(dyn.dim)
    return hermitian_expm(dyn.hamiltonian, -1j * dt)


def heisenberg_projector(dyn: Dynamics, p: Projector, t: float) -> Projector:
    """P(t) = U^dag(t, t_r) P U(t, t_r) with t_r the dynamics' reference time."""
    u = propagator(dyn, dyn.reference_time, t)
    m = u.conj().T @ p.matrix @ u
    return Projector(0.5 * (m + m.conj().T), p.label)


def _unit_vector(v, tol: Tolerance, normalize: bool) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise DomainError("state vector must be nonempty and finite")
    n = np.linalg.norm(v)
    if normalize:
        if n == 0:
            raise DomainError("cannot normalize the zero vector")
        return v / n
    if not tol.accepts(abs(n - 1.0), 1.0):
        raise DomainError(f"state vector is not normalized (norm {n:.12g})")
    return v


def mixed_state(weights: Sequence[float], pure_vectors, tol: Tolerance = DEFAULT_TOL,
                label: str = "") -> DensityOperator:
    """rho = sum_i w_i |phi_i><phi_i| for a probability vector w and unit vectors phi_i."""
    w = np.asarray(weights, dtype=float)
    vecs = [_unit_vector(v, tol, normalize=False) for v in pure_vectors]
    if w.ndim != 1 or len(w) != len(vecs) or len(vecs) == 0:
        raise ShapeError("need one weight per pure vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite and nonnegative")
    if not tol.accepts(abs(w.sum() - 1.0), 1.0):
        raise DomainError(f"weights sum to {w.sum():.12g}, not 1")
    dims = {v.size for v in vecs}
    if len(dims) != 1:
        raise ShapeError("pure vectors have different dimensions")
    rho = sum(wi * np.outer(v, v.conj()) for wi, v in zip(w, vecs))
    return DensityOperator(rho, label)


def pure_state(vector, label: str = "") -> DensityOperator:
    """|psi><psi| for ``vector`` after normalization."""
    v = _unit_vector(vector, DEFAULT_TOL, normalize=True)
    return DensityOperator(np.outer(v, v.conj()), label)


def unit_axis(axis, tol: Tolerance = DEFAULT_TOL, normalize: bool = False) -> np.ndarray:
    n = np.asarray(axis, dtype=float).reshape(-1)
    if n.shape != (3,) or not np.all(np.isfinite(n)):
        raise DomainError(f"axis must be a finite real 3-vector, got {axis!r}")
    norm = np.linalg.norm(n)
    if normalize:
        if norm == 0:
            raise DomainError("axis is the zero vector")
        return n / norm
    if not tol.accepts(abs(norm - 1.0), 1.0):
        raise DomainError(f"axis {[float(x) for x in n]} is not a unit vector (norm {norm:.12g})")
    return n


def bloch_state(axis, label: str = "") -> DensityOperator:
    """Qubit pure state (I + sigma.n)/2; the axis is normalized on ingestion."""
    n = unit_axis(axis, normalize=True)
    return DensityOperator(0.5 * (identity(2) + sigma_dot(n)), label)


def spin_decomposition(axis, tol: Tolerance = DEFAULT_TOL, time=None) -> DecompositionOfUnity:
    """{(I + sigma.n)/2, (I - sigma.n)/2} labelled '+' and '-'."""
    n = unit_axis(axis, tol)
    s = sigma_dot(n)
    return DecompositionOfUnity(
        (Projector(0.5 * (identity(2) + s), "+"), Projector(0.5 * (identity(2) - s), "-")),
        time,
    )


def validate_decomposition(d: DecompositionOfUnity, tol: Tolerance = DEFAULT_TOL) -> ValidationReport:
    """List every failed idempotency, orthogonality or completeness constraint."""
    report = ValidationReport()
    mats = []
    for i, p in enumerate(d.projectors):
        m = np.asarray(p.matrix if isinstance(p, Projector) else p, dtype=np.complex128)
        mats.append(m)
    if not mats:
        report.add("empty", "decomposition", message="no projectors")
        return report
    dims = {m.shape for m in mats}
    if len(dims) != 1 or any(len(s) != 2 or s[0] != s[1] for s in dims):
        report.add("shape", "decomposition", message=f"inconsistent shapes {sorted(dims)}")
        return report
    names = d.names if all(isinstance(p, Projector) for p in d.projectors) else [
        str(i) for i in range(len(mats))]
    for name, m in zip(names, mats):
        r = projector_residual(m)
        if not tol.accepts(r, max_norm(m)):
            report.add("idempotency", f"P[{name}]", r)
        if max_norm(m) <= tol.abs_eps:
            report.add("zero", f"P[{name}]", max_norm(m), "zero projectors are not allowed")
    for (na, a), (nb, b) in combinations(zip(names, mats), 2):
        r = max_norm(a @ b)
        if not tol.accepts(r, 1.0):
            report.add("orthogonality", f"P[{na}] P[{nb}]", r)
    dim = mats[0].shape[0]
    r = max_norm(sum(mats) - identity(dim))
    if not tol.accepts(r, 1.0):
        report.add("completeness", "sum P - I", r)
    return report
