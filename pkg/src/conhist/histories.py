"""Histories, history families, coarse-graining and chain operators."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ShapeError, UnknownLabelError, UnsupportedStructureError
from .kinematics import (
    DecompositionOfUnity,
    DensityOperator,
    Dynamics,
    Projector,
    heisenberg_projector,
)
from .matrix_core import DEFAULT_TOL, Tolerance, frozen, identity, max_norm

Label = tuple[int, ...]
BranchResolver = Callable[[Label], DecompositionOfUnity]


@dataclass(frozen=True)
class QuantumEvent:
    time: float
    projector: Projector


def _check_increasing(times: Sequence[float], what: str):
    for i in range(len(times) - 1):
        if not times[i] < times[i + 1]:
            raise DomainError(
                f"{what} times must strictly increase: t[{i}]={times[i]!r} >= t[{i + 1}]={times[i + 1]!r}"
            )


@dataclass(frozen=True)
class TemporalSupport:
    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise DomainError("temporal support must be nonempty")
        if not all(np.isfinite(times)):
            raise DomainError("support times must be finite")
        _check_increasing(times, "support")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(self.times)


@dataclass(frozen=True)
class History:
    events: tuple[QuantumEvent, ...]
    label: Label = ()

    def __post_init__(self):
        events = tuple(self.events)
        if not events:
            raise DomainError("a history needs at least one event")
        _check_increasing([e.time for e in events], "history")
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "label", tuple(self.label))

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(e.time for e in self.events)

    @property
    def projectors(self) -> tuple[Projector, ...]:
        return tuple(e.projector for e in self.events)


@dataclass(frozen=True, eq=False)
class ChainOperator:
    matrix: np.ndarray
    label: Label


@dataclass(frozen=True, eq=False)
class HistoryFamily:
    """An exclusive, exhaustive set of histories with dynamics and state.

    ``decompositions`` is set for product families (one decomposition per
    support time) and is ``None`` for branch-dependent families, which carry
    their ``branch_tree`` resolver instead.  ``groupings`` records, for a
    family produced by :func:`coarse_grain`, the blocks of fine branch indices
    merged into each coarse index at every time (``None`` where unchanged).
    """

    support: TemporalSupport
    histories: Mapping[Label, History]
    dynamics: Dynamics
    initial_state: DensityOperator
    final_state: DensityOperator | None = None
    decompositions: tuple[DecompositionOfUnity, ...] | None = None
    branch_tree: BranchResolver | None = None
    groupings: tuple | None = None
    impossible: tuple = ()
    name: str = ""

    def __post_init__(self):
        for lab, h in self.histories.items():
            if h.times != self.support.times:
                raise DomainError(f"history {lab} does not share the family support")
        dims = {self.dynamics.dim, self.initial_state.dim}
        if self.final_state is not None:
            dims.add(self.final_state.dim)
        if len(dims) != 1:
            raise ShapeError(f"dynamics and states disagree on dimension: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.dynamics.dim

    @property
    def labels(self) -> list[Label]:
        return list(self.histories)

    @property
    def is_product(self) -> bool:
        return self.decompositions is not None

    def __len__(self) -> int:
        return len(self.histories)

    def __getitem__(self, label) -> History:
        try:
            return self.histories[tuple(label)]
        except KeyError:
            raise UnknownLabelError(f"no history labelled {tuple(label)!r} in family") from None

    def with_state(self, initial_state: DensityOperator | None = None,
                   final_state: DensityOperator | None | str = "keep") -> "HistoryFamily":
        """Re-bind the same histories to a different initial and/or final state."""
        changes = {}
        if initial_state is not None:
            changes["initial_state"] = initial_state
        if final_state != "keep":
            changes["final_state"] = final_state
        return replace(self, **changes)

    def branch_names(self, label: Label) -> tuple[str, ...]:
        h = self[label]
        return tuple(p.label or str(i) for p, i in zip(h.projectors, label))

    @cached_property
    def chain_operators(self) -> dict[Label, np.ndarray]:
        """All chain operators, keyed by label (cached; families are immutable)."""
        heis: dict = {}

        def hp(p: Projector, t: float) -> np.ndarray:
            key = (id(p), t)
            if key not in heis:
                heis[key] = heisenberg_projector(self.dynamics, p, t).matrix
            return heis[key]

        out = {}
        for lab, h in self.histories.items():
            c = identity(self.dim)
            for ev in h.events:
                c = hp(ev.projector, ev.time) @ c
            out[lab] = frozen(c)
        return out


def _histories_from_choices(support: TemporalSupport, choices: Iterable[tuple[Label, Sequence[Projector]]]):
    out = {}
    for lab, projs in choices:
        out[lab] = History(tuple(QuantumEvent(t, p) for t, p in zip(support.times, projs)), lab)
    return out


def product_family(support: TemporalSupport, decomps: Sequence[DecompositionOfUnity],
                   dyn: Dynamics, rho: DensityOperator, final_state: DensityOperator | None = None,
                   tol: Tolerance = DEFAULT_TOL, name: str = "") -> HistoryFamily:
    """All sequences of one projector per support time; labels are index tuples."""
    decomps = tuple(decomps)
    if len(decomps) != len(support):
        raise ShapeError(f"{len(support)} support times but {len(decomps)} decompositions")
    for j, d in enumerate(decomps):
        try:
            d.check(tol)
        except DomainError as exc:
            raise DomainError(f"decomposition at t={support.times[j]}: {exc}") from None
        if d.dim != dyn.dim:
            raise ShapeError(f"decomposition at t={support.times[j]} has dim {d.dim}, expected {dyn.dim}")
    decomps = tuple(replace(d, time=t) for d, t in zip(decomps, support.times))
    choices = (
        (lab, [decomps[j].projectors[a] for j, a in enumerate(lab)])
        for lab in product(*(range(len(d)) for d in decomps))
    )
    return HistoryFamily(support, _histories_from_choices(support, choices), dyn, rho,
                         final_state, decompositions=decomps, name=name)


def branch_dependent_family(support: TemporalSupport, tree: BranchResolver, dyn: Dynamics,
                            rho: DensityOperator, final_state: DensityOperator | None = None,
                            tol: Tolerance = DEFAULT_TOL, name: str = "") -> HistoryFamily:
    """Family whose decomposition at t_j is ``tree(prefix)`` for the branch prefix so far."""
    checked: dict[Label, DecompositionOfUnity] = {}

    def resolve(prefix: Label) -> DecompositionOfUnity:
        if prefix not in checked:
            d = tree(prefix)
            try:
                d.check(tol)
            except DomainError as exc:
                raise DomainError(f"branch resolver at prefix {prefix}: {exc}") from None
            if d.dim != dyn.dim:
                raise ShapeError(f"branch resolver at prefix {prefix} returned dim {d.dim}")
            checked[prefix] = d
        return checked[prefix]

    choices = []

    def walk(prefix: Label, projs: list[Projector]):
        if len(prefix) == len(support):
            choices.append((prefix, list(projs)))
            return
        for a, p in enumerate(resolve(prefix)):
            walk(prefix + (a,), projs + [p])

    walk((), [])
    return HistoryFamily(support, _histories_from_choices(support, choices), dyn, rho,
                         final_state, branch_tree=tree, name=name)


def partition_matrix(blocks: Sequence[Sequence[int]], n_fine: int) -> np.ndarray:
    """0/1 matrix b[beta, alpha] with b = 1 iff fine index alpha is in block beta."""
    b = np.zeros((len(blocks), n_fine), dtype=int)
    for beta, block in enumerate(blocks):
        for alpha in block:
            b[beta, alpha] = 1
    return b


def _blocks_from_matrix(b, n_fine: int, where: str) -> tuple[tuple[int, ...], ...]:
    b = np.asarray(b)
    if b.ndim != 2 or b.shape[1] != n_fine:
        raise DomainError(f"grouping at {where} must have shape (n_coarse, {n_fine}), got {b.shape}")
    if not np.all((b == 0) | (b == 1)):
        raise DomainError(f"grouping at {where} has entries other than 0 and 1")
    cols = b.sum(axis=0)
    if not np.all(cols == 1):
        bad = [int(a) for a in np.nonzero(cols != 1)[0]]
        raise DomainError(f"grouping at {where} is not a partition: fine indices {bad} "
                          "are not assigned to exactly one coarse index")
    rows = b.sum(axis=1)
    if np.any(rows == 0):
        raise DomainError(f"grouping at {where} has an empty coarse index")
    return tuple(tuple(int(a) for a in np.nonzero(row)[0]) for row in b)


def coarse_grain(family: HistoryFamily, grouping: Mapping[int, object],
                 tol: Tolerance = DEFAULT_TOL) -> HistoryFamily:
    """Merge branches at chosen times: Q^beta = sum_alpha b[beta, alpha] P^alpha.

    ``grouping`` maps a support index j to a 0/1 matrix ``b`` of shape
    (n_coarse, n_fine); :func:`partition_matrix` builds one from blocks.
    The temporal support is unchanged.
    """
    if not family.is_product:
        raise UnsupportedStructureError(
            "coarse_grain is defined for product families only; "
            "branch-dependent families have no per-time decomposition to group"
        )
    n = len(family.support)
    new_decomps = list(family.decompositions)
    prior = family.groupings or (None,) * n
    groupings = list(prior)
    for j, b in grouping.items():
        if not 0 <= j < n:
            raise DomainError(f"grouping refers to support index {j}, family has {n} times")
        d = family.decompositions[j]
        blocks = _blocks_from_matrix(b, len(d), f"t[{j}]")
        projs = []
        for block in blocks:
            m = sum(d.projectors[a].matrix for a in block)
            name = "|".join(d.names[a] for a in block) if len(block) > 1 else d.names[block[0]]
            projs.append(Projector(m, name))
        new_decomps[j] = DecompositionOfUnity(tuple(projs), d.time)
        # keep blocks expressed in the finest indices across repeated coarse-graining
        if prior[j] is not None:
            blocks = tuple(tuple(a for b_ in block for a in prior[j][b_]) for block in blocks)
        groupings[j] = blocks
    out = product_family(family.support, new_decomps, family.dynamics, family.initial_state,
                         family.final_state, tol, family.name)
    return replace(out, groupings=tuple(groupings))


def coarse_label_blocks(coarse: HistoryFamily, fine: HistoryFamily) -> dict[Label, list[Label]]:
    """Map each label of ``coarse`` to the fine labels it groups.

    ``coarse`` must come from ``fine`` through :func:`coarse_grain` (possibly
    repeatedly); ungrouped times map index to index.
    """
    if coarse.groupings is None and fine.groupings is None:
        groupings = (None,) * len(coarse.support)
    else:
        groupings = coarse.groupings or (None,) * len(coarse.support)
        if fine.groupings is not None and any(g is not None for g in fine.groupings):
            raise DomainError("fine family is itself coarse-grained; pass the original family")
    if coarse.support.times != fine.support.times:
        raise DomainError("coarse and fine families have different supports")
    out = {}
    for lab in coarse.labels:
        per_time = [g[b] if g is not None else (b,) for g, b in zip(groupings, lab)]
        out[lab] = [tuple(x) for x in product(*per_time)]
    return out


def chain_operator(family: HistoryFamily, label) -> ChainOperator:
    """C = P_n(t_n) ... P_1(t_1) with Heisenberg-picture projectors, latest leftmost."""
    label = tuple(label)
    family[label]  # raises UnknownLabelError
    return ChainOperator(family.chain_operators[label], label)


def completeness_check(family: HistoryFamily) -> float:
    """Max-entry norm of sum_alpha C_alpha - I."""
    total = sum(family.chain_operators.values())
    return max_norm(total - identity(family.dim))


def drop_identity_times(family: HistoryFamily, tol: Tolerance = DEFAULT_TOL) -> HistoryFamily:
    """Remove support times whose decomposition is the trivial {I}.

    Labels lose the corresponding (always zero) coordinate.  If every time is
    trivial the last one is kept so the support stays nonempty.
    """
    if not family.is_product:
        raise UnsupportedStructureError("support normalization needs a product family")
    keep = [j for j, d in enumerate(family.decompositions) if not d.is_trivial(tol)]
    if not keep:
        keep = [len(family.support) - 1]
    support = TemporalSupport(tuple(family.support.times[j] for j in keep))
    return product_family(support, [family.decompositions[j] for j in keep], family.dynamics,
                          family.initial_state, family.final_state, tol, family.name)
