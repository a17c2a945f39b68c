"""Random corpora of families for property checks and experiment scripts."""

from __future__ import annotations

import numpy as np

from .histories import HistoryFamily, TemporalSupport, partition_matrix, product_family
from .kinematics import DecompositionOfUnity, DensityOperator, Dynamics, Projector


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    rank = rank or int(rng.integers(1, dim + 1))
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return DensityOperator(rho / np.trace(rho).real)


def random_blocks(n: int, rng: np.random.Generator, n_blocks: int | None = None) -> list[list[int]]:
    """Random partition of range(n) into ``n_blocks`` nonempty blocks."""
    n_blocks = n_blocks or int(rng.integers(1, n + 1))
    perm = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=n_blocks - 1, replace=False)) if n_blocks > 1 else []
    return [sorted(int(x) for x in part) for part in np.split(perm, cuts)]


def random_decomposition(dim: int, rng: np.random.Generator,
                         n_outcomes: int | None = None) -> DecompositionOfUnity:
    """Group the columns of a random unitary into ``n_outcomes`` orthogonal projectors."""
    u = random_unitary(dim, rng)
    blocks = random_blocks(dim, rng, n_outcomes or int(rng.integers(2, dim + 1)) if dim > 1 else 1)
    projs = []
    for k, block in enumerate(blocks):
        v = u[:, block]
        projs.append(Projector(v @ v.conj().T, str(k)))
    return DecompositionOfUnity(tuple(projs))


def random_family(rng: np.random.Generator, max_dim: int = 4, max_times: int = 4,
                  with_final: bool = False) -> HistoryFamily:
    dim = int(rng.integers(2, max_dim + 1))
    n = int(rng.integers(1, max_times + 1))
    times = np.sort(rng.uniform(0.1, 5.0, size=n))
    while np.any(np.diff(times) <= 0):
        times = np.sort(rng.uniform(0.1, 5.0, size=n))
    dyn = Dynamics(random_hermitian(dim, rng), reference_time=0.0)
    decomps = [random_decomposition(dim, rng) for _ in range(n)]
    final = random_density(dim, rng) if with_final else None
    return product_family(TemporalSupport(tuple(times)), decomps, dyn, random_density(dim, rng), final)


def random_grouping(family: HistoryFamily, rng: np.random.Generator) -> dict[int, np.ndarray]:
    """Random 0/1 partition matrices at a random nonempty subset of support times."""
    n = len(family.support)
    chosen = [j for j in range(n) if rng.random() < 0.6] or [int(rng.integers(n))]
    return {j: partition_matrix(random_blocks(len(family.decompositions[j]), rng),
                                len(family.decompositions[j])) for j in chosen}
