"""Partial semigroups: temporal supports (K1), histories (K2) and finite tables.

Composition is partial; an undefined product is ``None``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations, product
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .histories import QuantumEvent
from .kinematics import Projector
from .validation import ValidationReport


@dataclass(frozen=True)
class K1Element:
    """A finite ordered set of times t_1 < ... < t_n."""

    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise DomainError("K1 elements are nonempty")
        if any(not a < b for a, b in zip(times, times[1:])):
            raise DomainError(f"K1 element times must strictly increase: {times}")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    def __repr__(self) -> str:
        return "{" + ", ".join(f"{t:g}" for t in self.times) + "}"


def k1(*times: float) -> K1Element:
    return K1Element(tuple(times))


def k1_compose(s: K1Element, t: K1Element) -> K1Element | None:
    """Concatenate when s_m <= t_1; a shared endpoint is merged, so {t}o{t} = {t}."""
    if s.times[-1] < t.times[0]:
        return K1Element(s.times + t.times)
    if s.times[-1] == t.times[0]:
        return K1Element(s.times + t.times[1:])
    return None


def k1_nuclear_decomposition(t: K1Element) -> list[K1Element]:
    return [K1Element((x,)) for x in t.times]


@dataclass(frozen=True, eq=False)
class K2Element:
    """A history as a bare sequence of events, composed by concatenation."""

    events: tuple[QuantumEvent, ...]

    def __post_init__(self):
        events = tuple(self.events)
        if not events:
            raise DomainError("K2 elements are nonempty")
        times = [e.time for e in events]
        if any(not a < b for a, b in zip(times, times[1:])):
            raise DomainError(f"K2 element times must strictly increase: {times}")
        object.__setattr__(self, "events", events)

    def key(self) -> tuple:
        """Hashable identity: times and projector matrices (rounded)."""
        return tuple((e.time, _matrix_key(e.projector.matrix)) for e in self.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, K2Element) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())


def _matrix_key(m: np.ndarray, digits: int = 12) -> tuple:
    r = np.round(m, digits) + 0.0  # drop negative zeros
    return (m.shape, tuple(r.real.ravel()), tuple(r.imag.ravel()))


def k2_compose(a: K2Element, b: K2Element) -> K2Element | None:
    """Concatenate events; defined only when the last time of a precedes the first of b."""
    if a.events[-1].time < b.events[0].time:
        return K2Element(a.events + b.events)
    return None


def sigma_support(a: K2Element) -> K1Element:
    return K1Element(tuple(e.time for e in a.events))


@dataclass
class FinitePsg:
    """A finite partial semigroup given by its (partial) composition table."""

    elements: tuple[Hashable, ...]
    table: dict[tuple[Hashable, Hashable], Hashable] = field(default_factory=dict)

    def __post_init__(self):
        self.elements = tuple(self.elements)
        if not self.elements:
            raise DomainError("a partial semigroup is nonempty")
        if len(set(self.elements)) != len(self.elements):
            raise DomainError("duplicate elements in partial semigroup")
        known = set(self.elements)
        for (s, t), u in self.table.items():
            bad = [x for x in (s, t, u) if x not in known]
            if bad:
                raise DomainError(f"table entry {s!r} o {t!r} = {u!r} references unknown {bad[0]!r}")

    @classmethod
    def from_triples(cls, elements: Iterable[Hashable], triples: Iterable[Sequence]) -> "FinitePsg":
        table = {}
        for left, right, result in triples:
            if (left, right) in table and table[(left, right)] != result:
                raise DomainError(f"conflicting entries for {left!r} o {right!r}")
            table[(left, right)] = result
        return cls(tuple(elements), table)

    @classmethod
    def generate(cls, elements: Iterable[Hashable],
                 compose: Callable[[Hashable, Hashable], Hashable | None]) -> "FinitePsg":
        """Tabulate ``compose`` on ``elements``; products outside the set stay undefined."""
        elements = tuple(elements)
        known = set(elements)
        table = {}
        for s in elements:
            for t in elements:
                u = compose(s, t)
                if u is not None and u in known:
                    table[(s, t)] = u
        return cls(elements, table)

    def compose(self, s, t):
        return self.table.get((s, t))

    def triples(self) -> list[tuple]:
        return [(s, t, u) for (s, t), u in self.table.items()]


DEFAULT_MAX_ELEMENTS = 64


def _find_unit(p: FinitePsg):
    return [e for e in p.elements
            if all(p.compose(e, s) == s and p.compose(s, e) == s for s in p.elements)]


def _find_absorbing(p: FinitePsg):
    return [a for a in p.elements
            if all(p.compose(a, s) == a and p.compose(s, a) == a for s in p.elements)]


def special_elements(p: FinitePsg) -> tuple[Hashable | None, Hashable | None]:
    units, absorbing = _find_unit(p), _find_absorbing(p)
    return (units[0] if units else None, absorbing[0] if absorbing else None)


def typical_elements(p: FinitePsg) -> list[Hashable]:
    unit, absorbing = special_elements(p)
    return [e for e in p.elements if e != unit and e != absorbing]


def nuclear_elements(p: FinitePsg) -> list[Hashable]:
    """Typical elements with no decomposition x = s o t into typical s, t both different from x.

    Trivial factorizations such as {t} o {t} = {t} are redundancies, not decompositions.
    """
    typical = typical_elements(p)
    tset = set(typical)
    decomposable = {u for (s, t), u in p.table.items()
                    if s in tset and t in tset and s != u and t != u}
    return [x for x in typical if x not in decomposable]


def validate_finite_psg(p: FinitePsg, max_elements: int = DEFAULT_MAX_ELEMENTS) -> ValidationReport:
    """Exhaustive associativity scan plus unit/absorbing/nuclear/directedness findings."""
    n = len(p.elements)
    if n > max_elements:
        raise DomainError(f"{n} elements exceed the validator cap of {max_elements}")
    report = ValidationReport()
    for (s, t), st in p.table.items():
        for u in p.elements:
            tu = p.compose(t, u)
            if tu is None:
                continue
            left = p.compose(st, u)
            right = p.compose(s, tu)
            if left is not None and right is not None and left != right:
                report.add("associativity", f"({s!r} o {t!r}) o {u!r}",
                           message=f"{left!r} != {right!r}")

    units, absorbing = _find_unit(p), _find_absorbing(p)
    if len(units) > 1:
        report.add("unit", "unit element", message=f"not unique: {units!r}")
    if len(absorbing) > 1:
        report.add("absorbing", "absorbing element", message=f"not unique: {absorbing!r}")

    typical = typical_elements(p)
    undirected = []
    for s, t in combinations(typical, 2):
        if p.compose(s, t) is not None and p.compose(t, s) is not None:
            undirected.append((s, t))
    report.notes.update(
        unit=_show(units[0]) if units else None,
        absorbing=_show(absorbing[0]) if absorbing else None,
        nuclear=[_show(x) for x in nuclear_elements(p)],
        directed=not undirected,
        undirected_pairs=[[_show(s), _show(t)] for s, t in undirected],
        associative=not report.kinds() & {"associativity"},
    )
    return report


def _show(x):
    return x if isinstance(x, (str, int, float)) else repr(x)


def is_homomorphism(p: FinitePsg, sigma_map: Mapping, support: FinitePsg) -> list[str]:
    """Return the reasons ``sigma_map`` fails to be a psg homomorphism (empty if it is one)."""
    problems = []
    known = set(support.elements)
    for e in p.elements:
        if e not in sigma_map:
            problems.append(f"sigma undefined on {e!r}")
        elif sigma_map[e] not in known:
            problems.append(f"sigma({e!r}) = {sigma_map[e]!r} is not in the support psg")
    if problems:
        return problems
    for (s, t), u in p.table.items():
        image = support.compose(sigma_map[s], sigma_map[t])
        if image is None:
            problems.append(f"sigma({s!r}) o sigma({t!r}) undefined although {s!r} o {t!r} is")
        elif image != sigma_map[u]:
            problems.append(f"sigma({s!r} o {t!r}) = {sigma_map[u]!r} != {image!r}")
    return problems


def check_causality(p: FinitePsg, sigma_map: Mapping, support: FinitePsg) -> ValidationReport:
    """Search for precedence chains of nuclear elements that return to the same support.

    A chain a < b < ... < c (x < y meaning x o y is defined) with sigma(a) =
    sigma(c) violates causality unless every element of the chain is the same.
    Findings hold for the supplied tables only.
    """
    problems = is_homomorphism(p, sigma_map, support)
    if problems:
        raise DomainError("sigma is not a homomorphism: " + "; ".join(problems[:5]))
    report = ValidationReport()
    nuc = nuclear_elements(p)
    succ = {a: [b for b in nuc if b != a and p.compose(a, b) is not None] for a in nuc}

    def path(src, dst):
        """Shortest chain src < ... < dst through distinct elements (length >= 1)."""
        parent = {src: None}
        queue = deque([src])
        while queue:
            x = queue.popleft()
            for y in succ[x]:
                if y == dst:
                    chain = [y, x]
                    while parent[x] is not None:
                        x = parent[x]
                        chain.append(x)
                    return chain[::-1]
                if y not in parent:
                    parent[y] = x
                    queue.append(y)
        return None

    for a in nuc:
        for c in nuc:
            if sigma_map[a] != sigma_map[c]:
                continue
            chain = path(a, c)
            if chain is not None:
                report.add("causality", " < ".join(repr(x) for x in chain),
                           message=f"closed loop: sigma({a!r}) = sigma({c!r})")
    nuclear_support = set(nuclear_elements(support))
    image = {sigma_map[x] for x in nuc}
    report.notes["nuclear_images_match"] = image == nuclear_support
    report.notes["scope"] = "holds on supplied table"
    return report


def k1_finite_psg(times: Sequence[float], max_len: int = 4) -> FinitePsg:
    """All K1 elements over ``times`` with at most ``max_len`` points, with their table."""
    elements = [K1Element(c) for k in range(1, max_len + 1)
                for c in combinations(sorted(times), k)]
    return FinitePsg.generate(elements, k1_compose)


def k2_finite_psg(times: Sequence[float], projectors: Sequence[Projector],
                  max_len: int = 4) -> tuple[FinitePsg, dict, FinitePsg]:
    """Histories over ``times`` built from ``projectors``, with sigma onto the K1 table."""
    elements = []
    for k in range(1, max_len + 1):
        for ts in combinations(sorted(times), k):
            for ps in product(projectors, repeat=k):
                elements.append(K2Element(tuple(QuantumEvent(t, q) for t, q in zip(ts, ps))))
    hist = FinitePsg.generate(elements, k2_compose)
    supp = k1_finite_psg(times, max_len)
    sigma = {e: sigma_support(e) for e in elements}
    return hist, sigma, supp


def fold_compose(items: Sequence, compose: Callable):
    """Left fold; None as soon as a partial product is undefined."""
    def step(acc, x):
        return None if acc is None else compose(acc, x)
    return reduce(step, items[1:], items[0])
