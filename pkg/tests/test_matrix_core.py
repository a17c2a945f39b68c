import numpy as np
import pytest
from hypothesis import given, strategies as st

from conhist.errors import DomainError, ShapeError
from conhist.matrix_core import (
    Tolerance,
    adjoint,
    as_matrix,
    hermitian_expm,
    is_density,
    is_projector,
    is_unitary,
    kron,
    matmul,
    max_norm,
    sigma_dot,
    trace,
)
from conhist.sampling import random_hermitian

from conftest import I2, PZM, PZP, SX, SZ, random_unit


def taylor_expm(a, terms=80):
    """Independent reference: truncated power series with scaling and squaring."""
    s = max(0, int(np.ceil(np.log2(max(np.abs(a).sum(), 1.0)))) + 1)
    a = a / 2**s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def complex_matrices(n):
    entry = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
    return st.lists(st.lists(entry, min_size=n, max_size=n), min_size=n, max_size=n).map(np.array)


def test_matmul_examples():
    assert np.allclose(matmul(I2, SX), SX)
    assert np.allclose(matmul(SX, SX), I2)
    assert np.allclose(matmul(PZP, PZM), 0)


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(DomainError):
        as_matrix([[np.nan, 0], [0, 1]])


def test_adjoint_examples():
    assert np.allclose(adjoint(np.diag([1j, -1j])), np.diag([-1j, 1j]))
    h = np.array([[1, 2 - 1j], [2 + 1j, 3]])
    assert np.allclose(adjoint(h), h)


def test_adjoint_of_product(rng):
    for _ in range(10):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.allclose(adjoint(a @ b), adjoint(b) @ adjoint(a), atol=1e-12)


def test_trace_examples(rng):
    assert trace(np.eye(4)) == 4
    assert trace(SZ) == 0
    for _ in range(10):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        assert abs(trace(a @ b) - trace(b @ a)) < 1e-10
    with pytest.raises(ShapeError):
        trace(np.ones((2, 3)))


def test_kron_examples(rng):
    assert np.allclose(kron(I2, I2), np.eye(4))
    assert np.allclose(kron(SX, SX), np.fliplr(np.eye(4)))
    for _ in range(10):
        p, q, r, s = (0.5 * (I2 + sigma_dot(random_unit(rng))) for _ in range(4))
        assert np.allclose(kron(p, q) @ kron(r, s), kron(p @ r, q @ s), atol=1e-12)


@given(complex_matrices(2), complex_matrices(2), complex_matrices(2))
def test_kron_associative(a, b, c):
    left = kron(kron(a, b), c)
    right = kron(a, kron(b, c))
    assert left.shape == right.shape == (8, 8)
    assert max_norm(left - right) <= 1e-10 * max(1.0, max_norm(left))


def test_hermitian_expm_examples():
    assert np.allclose(hermitian_expm(SZ, -1j * np.pi), -I2, atol=1e-12)
    assert np.allclose(hermitian_expm(np.zeros((3, 3)), 1.0), np.eye(3))
    assert np.allclose(hermitian_expm(SX, -1j * np.pi / 2), -1j * SX, atol=1e-12)
    assert np.allclose(taylor_expm(-1j * np.pi / 2 * SX), -1j * SX, atol=1e-12)


def test_hermitian_expm_matches_series(rng):
    for dim in (2, 3, 4):
        h = random_hermitian(dim, rng)
        for scale in (-0.7j, 1.3j, 0.4, -0.25 + 0.5j):
            assert np.allclose(hermitian_expm(h, scale), taylor_expm(scale * h), atol=1e-10)


def test_hermitian_expm_rejects_nonhermitian():
    with pytest.raises(DomainError):
        hermitian_expm(np.array([[0, 1], [0, 0]]), 1j)


@given(st.integers(2, 4), st.floats(-20, 20), st.integers(0, 2**32 - 1))
def test_unitary_evolution(dim, t, seed):
    h = random_hermitian(dim, np.random.default_rng(seed))
    assert is_unitary(hermitian_expm(h, -1j * t))


@given(complex_matrices(3))
def test_trace_of_gram_nonnegative(a):
    g = trace(adjoint(a) @ a)
    assert abs(g.imag) <= 1e-10 * max(1.0, abs(g))
    assert g.real >= -1e-10


def test_is_projector_examples(rng):
    assert is_projector(PZP)
    assert not is_projector(SX)
    for _ in range(20):
        assert is_projector(0.5 * (I2 + sigma_dot(random_unit(rng))))


def test_is_density_examples(rng):
    assert is_density(I2 / 2)
    assert not is_density(np.diag([2.0, -1.0]))
    assert not is_density(np.diag([0.7, 0.7]))
    for _ in range(20):
        w = rng.dirichlet(np.ones(3))
        vecs = [v / np.linalg.norm(v) for v in rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))]
        rho = sum(wi * np.outer(v, v.conj()) for wi, v in zip(w, vecs))
        assert is_density(rho)


def test_tolerance_validation():
    with pytest.raises(DomainError):
        Tolerance(-1.0, 0.0)
    loose = Tolerance(1e-3, 0)
    assert is_projector(PZP + 1e-5, loose)
    assert not is_projector(PZP + 1e-5)
