"""Dense complex matrix kernel with tolerance-aware predicates.

Matrices are plain ``numpy.ndarray`` objects of dtype complex128; the functions
here validate shapes and finiteness and centralise the comparison policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError, ShapeError


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative comparison policy used by every predicate.

    A residual ``r`` measured against a reference of size ``scale`` is accepted
    when ``r <= abs_eps + rel_eps * scale``.
    """

    abs_eps: float = 1e-10
    rel_eps: float = 1e-10

    def __post_init__(self):
        for name in ("abs_eps", "rel_eps"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and nonnegative, got {v!r}")

    def accepts(self, residual: float, scale: float = 1.0) -> bool:
        return residual <= self.abs_eps + self.rel_eps * scale


DEFAULT_TOL = Tolerance()


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ShapeError(f"{name} must be a nonempty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    return m


def frozen(a: np.ndarray) -> np.ndarray:
    """Return a read-only copy so value types stay immutable."""
    m = np.array(a, dtype=np.complex128, copy=True)
    m.setflags(write=False)
    return m


def max_norm(a) -> float:
    """Largest absolute entry."""
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def close(a, b, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return tol.accepts(max_norm(a - b), max_norm(b))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, name="left operand")
    b = as_matrix(b, name="right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a, square=True)))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def hermiticity_residual(a) -> float:
    a = np.asarray(a)
    return max_norm(a - a.conj().T)


def is_hermitian(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = as_matrix(a, square=True)
    return tol.accepts(hermiticity_residual(a), max_norm(a))


def hermitian_expm(h, scale: complex) -> np.ndarray:
    """exp(scale * h) for Hermitian ``h`` through its unitary eigendecomposition."""
    h = as_matrix(h, square=True, name="generator")
    if not is_hermitian(h):
        raise DomainError("hermitian_expm requires a Hermitian generator")
    scale = complex(scale)
    if not np.isfinite(scale):
        raise DomainError(f"scale must be finite, got {scale!r}")
    try:
        evals, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    return (vecs * np.exp(scale * evals)) @ vecs.conj().T


def projector_residual(p) -> float:
    """max(|P^2 - P|, |P^dag - P|) in the max-entry norm."""
    p = np.asarray(p)
    return max(max_norm(p @ p - p), hermiticity_residual(p))


def is_projector(p, tol: Tolerance = DEFAULT_TOL) -> bool:
    p = as_matrix(p, square=True)
    return tol.accepts(projector_residual(p), max_norm(p))


def is_density(r, tol: Tolerance = DEFAULT_TOL) -> bool:
    r = as_matrix(r, square=True)
    if not is_hermitian(r, tol):
        return False
    evals = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    if evals.min() < -tol.abs_eps:
        return False
    return tol.accepts(abs(np.trace(r) - 1.0), 1.0)


def is_unitary(u, tol: Tolerance = DEFAULT_TOL) -> bool:
    u = as_matrix(u, square=True)
    return close(u.conj().T @ u, identity(u.shape[0]), tol)


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


# Pauli matrices, handy for qubit constructions.
SIGMA_X = frozen([[0, 1], [1, 0]])
SIGMA_Y = frozen([[0, -1j], [1j, 0]])
SIGMA_Z = frozen([[1, 0], [0, -1]])


def sigma_dot(axis) -> np.ndarray:
    """sigma . n for a real 3-vector n."""
    x, y, z = (float(v) for v in axis)
    return x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z
