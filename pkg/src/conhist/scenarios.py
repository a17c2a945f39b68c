"""Scenario files: JSON description of a history family and its kinematics.

Complex numbers are ``[re, im]`` pairs (bare reals are accepted too) and
matrices are row-major nested lists.  See the README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DomainError, HistoriesError
from .histories import HistoryFamily, TemporalSupport, branch_dependent_family, product_family
from .kinematics import (
    DecompositionOfUnity,
    DensityOperator,
    Dynamics,
    Projector,
    bloch_state,
    pure_state,
    spin_decomposition,
    unit_axis,
    validate_decomposition,
)
from .matrix_core import is_density, is_hermitian, projector_residual

BUILTIN_PREFIX = "builtin:"


class ScenarioParseError(HistoriesError):
    """The file could not be read or is not valid JSON."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class ScenarioValidationError(HistoriesError):
    """The file parsed but violates one or more invariants; ``errors`` lists them all."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__(f"{len(errors)} validation error(s):\n  " + "\n  ".join(errors))


@dataclass(frozen=True, eq=False)
class BranchNode:
    decomposition: DecompositionOfUnity
    children: tuple["BranchNode", ...] = ()

    def resolver(self):
        def resolve(prefix):
            node = self
            for k, a in enumerate(prefix):
                if a >= len(node.children):
                    raise DomainError(f"branch tree has no child for prefix {tuple(prefix[:k + 1])}")
                node = node.children[a]
            return node.decomposition
        return resolve

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)


@dataclass(frozen=True, eq=False)
class Scenario:
    dimension: int
    hamiltonian: np.ndarray
    initial_state: DensityOperator
    times: tuple[float, ...]
    decompositions: tuple[DecompositionOfUnity, ...] | None = None
    branch_tree: BranchNode | None = None
    final_state: DensityOperator | None = None
    initial_time: float | None = None
    name: str = ""
    description: str = ""

    @property
    def reference_time(self) -> float:
        return self.initial_time if self.initial_time is not None else self.times[0]

    def dynamics(self) -> Dynamics:
        return Dynamics(self.hamiltonian, self.reference_time)

    def family(self, use_final_state: bool = True) -> HistoryFamily:
        fs = self.final_state if use_final_state else None
        support = TemporalSupport(self.times)
        if self.decompositions is not None:
            return product_family(support, self.decompositions, self.dynamics(), self.initial_state,
                                  fs, name=self.name)
        return branch_dependent_family(support, self.branch_tree.resolver(), self.dynamics(),
                                       self.initial_state, fs, name=self.name)


# ----------------------------------------------------------------------------- parsing

class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, path: str, msg: str):
        self.errors.append(f"{path}: {msg}")


def _complex(x, path, col: _Collector):
    if isinstance(x, bool):
        col.fail(path, "expected a number or [re, im]")
        return None
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                   for v in x):
        return complex(x[0], x[1])
    col.fail(path, f"expected a number or [re, im], got {x!r}")
    return None


def _vector(x, path, col):
    if not isinstance(x, list) or not x:
        col.fail(path, "expected a nonempty list")
        return None
    vals = [_complex(v, f"{path}[{i}]", col) for i, v in enumerate(x)]
    if any(v is None for v in vals):
        return None
    return np.array(vals, dtype=np.complex128)


def _matrix(x, path, col, dim: int | None):
    if not isinstance(x, list) or not x:
        col.fail(path, "expected a nonempty list of rows")
        return None
    rows = [_vector(r, f"{path}[{i}]", col) for i, r in enumerate(x)]
    if any(r is None for r in rows):
        return None
    if len({len(r) for r in rows}) != 1:
        col.fail(path, "rows have different lengths")
        return None
    m = np.array(rows)
    if m.shape[0] != m.shape[1]:
        col.fail(path, f"matrix must be square, got {m.shape}")
        return None
    if dim is not None and m.shape[0] != dim:
        col.fail(path, f"matrix is {m.shape[0]}x{m.shape[0]}, scenario dimension is {dim}")
        return None
    return m


def _state(x, path, col, dim):
    if not isinstance(x, dict) or len(x) != 1:
        col.fail(path, "expected exactly one of {'density', 'vector', 'bloch'}")
        return None
    (kind, val), = x.items()
    try:
        if kind == "density":
            m = _matrix(val, f"{path}.density", col, dim)
            if m is None:
                return None
            if not is_density(m):
                col.fail(f"{path}.density", "not a density operator (Hermitian, positive, trace 1)")
                return None
            return DensityOperator(m)
        if kind == "vector":
            v = _vector(val, f"{path}.vector", col)
            if v is None:
                return None
            if v.size != dim:
                col.fail(f"{path}.vector", f"length {v.size} does not match dimension {dim}")
                return None
            return pure_state(v)
        if kind == "bloch":
            if dim != 2:
                col.fail(f"{path}.bloch", "Bloch axes are only meaningful for dimension 2")
                return None
            return bloch_state(_real_list(val, f"{path}.bloch", col))
    except (HistoriesError, TypeError) as exc:
        col.fail(f"{path}.{kind}", str(exc))
        return None
    col.fail(path, f"unknown state form {kind!r}")
    return None


def _real_list(x, path, col):
    if not isinstance(x, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        col.fail(path, "expected a list of real numbers")
        return None
    return [float(v) for v in x]


def _decomposition(x, path, col, dim):
    if not isinstance(x, dict):
        col.fail(path, "expected an object with 'axis' or 'projectors'")
        return None
    names = x.get("names")
    if "axis" in x:
        if dim != 2:
            col.fail(f"{path}.axis", "axis shorthand requires dimension 2")
            return None
        axis = _real_list(x["axis"], f"{path}.axis", col)
        if axis is None:
            return None
        try:
            d = spin_decomposition(unit_axis(axis, normalize=True))
        except HistoriesError as exc:
            col.fail(f"{path}.axis", str(exc))
            return None
        if names is not None:
            d = DecompositionOfUnity(tuple(Projector(p.matrix, n) for p, n in zip(d, names)))
        return d
    if "projectors" in x:
        plist = x["projectors"]
        if not isinstance(plist, list) or not plist:
            col.fail(f"{path}.projectors", "expected a nonempty list of matrices")
            return None
        if names is not None and (not isinstance(names, list) or len(names) != len(plist)):
            col.fail(f"{path}.names", "need one name per projector")
            names = None
        mats = [_matrix(m, f"{path}.projectors[{i}]", col, dim) for i, m in enumerate(plist)]
        if any(m is None for m in mats):
            return None
        ok = True
        for i, m in enumerate(mats):
            r = projector_residual(m)
            if r > 1e-10 + 1e-10 * np.max(np.abs(m)):
                col.fail(f"{path}.projectors[{i}]", f"not a projector (residual {r:.3e})")
                ok = False
        if not ok:
            return None
        labels = [str(n) for n in names] if names is not None else [str(i) for i in range(len(mats))]
        d = DecompositionOfUnity(tuple(Projector(m, n) for m, n in zip(mats, labels)))
        report = validate_decomposition(d)
        for issue in report.issues:
            col.fail(path, str(issue))
        return d if report.ok else None
    col.fail(path, "expected 'axis' or 'projectors'")
    return None


def _branch_tree(x, path, col, dim, levels):
    if levels == 0:
        col.fail(path, "branch tree is deeper than the number of times")
        return None
    if not isinstance(x, dict) or "decomposition" not in x:
        col.fail(path, "expected an object with 'decomposition' and optional 'children'")
        return None
    d = _decomposition(x["decomposition"], f"{path}.decomposition", col, dim)
    children = x.get("children", [])
    if levels > 1:
        if d is not None and len(children) != len(d):
            col.fail(f"{path}.children", f"need {len(d)} children (one per branch), got {len(children)}")
            return None
        kids = [_branch_tree(c, f"{path}.children[{i}]", col, dim, levels - 1)
                for i, c in enumerate(children)]
        if d is None or any(k is None for k in kids):
            return None
        return BranchNode(d, tuple(kids))
    if children:
        col.fail(f"{path}.children", "leaf level must not have children")
        return None
    return None if d is None else BranchNode(d)


def scenario_from_dict(data: dict[str, Any]) -> Scenario:
    col = _Collector()
    if not isinstance(data, dict):
        raise ScenarioValidationError(["<root>: expected a JSON object"])
    known = {"name", "description", "dimension", "hamiltonian", "initial_time", "initial_state",
             "final_state", "times", "decompositions", "branch_tree"}
    for k in data:
        if k not in known:
            col.fail(k, "unknown field")
    dim = data.get("dimension")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        col.fail("dimension", f"expected a positive integer, got {dim!r}")
        raise ScenarioValidationError(col.errors)

    h = np.zeros((dim, dim), dtype=np.complex128)
    if "hamiltonian" in data:
        h = _matrix(data["hamiltonian"], "hamiltonian", col, dim)
        if h is not None and not is_hermitian(h):
            col.fail("hamiltonian", "not Hermitian")

    rho = None
    if "initial_state" not in data:
        col.fail("initial_state", "missing")
    else:
        rho = _state(data["initial_state"], "initial_state", col, dim)
    final = None
    if data.get("final_state") is not None:
        final = _state(data["final_state"], "final_state", col, dim)

    times = data.get("times")
    t0 = data.get("initial_time")
    if t0 is not None and (not isinstance(t0, (int, float)) or isinstance(t0, bool)):
        col.fail("initial_time", "expected a number")
        t0 = None
    if not isinstance(times, list) or not times or not all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in times):
        col.fail("times", "expected a nonempty list of numbers")
        times = None
    else:
        times = [float(t) for t in times]
        for i in range(len(times) - 1):
            if not times[i] < times[i + 1]:
                col.fail("times", f"times must strictly increase: times[{i}]={times[i]:g} "
                                  f">= times[{i + 1}]={times[i + 1]:g}")
        if t0 is not None and not t0 < times[0]:
            col.fail("initial_time", f"initial_time {t0:g} must precede the first time {times[0]:g}")

    decomps = tree = None
    has_d, has_t = "decompositions" in data, "branch_tree" in data
    if has_d == has_t:
        col.fail("decompositions", "give exactly one of 'decompositions' and 'branch_tree'")
    elif has_d:
        raw = data["decompositions"]
        if not isinstance(raw, list):
            col.fail("decompositions", "expected a list")
        else:
            if times is not None and len(raw) != len(times):
                col.fail("decompositions", f"{len(raw)} decompositions for {len(times)} times")
            decomps = [_decomposition(d, f"decompositions[{i}]", col, dim) for i, d in enumerate(raw)]
    elif times is not None:
        tree = _branch_tree(data["branch_tree"], "branch_tree", col, dim, len(times))
        if tree is not None and tree.depth() != len(times):
            col.fail("branch_tree", f"depth {tree.depth()} does not match {len(times)} times")

    if col.errors:
        raise ScenarioValidationError(col.errors)
    return Scenario(
        dimension=dim, hamiltonian=h, initial_state=rho, times=tuple(times),
        decompositions=tuple(decomps) if decomps is not None else None, branch_tree=tree,
        final_state=final, initial_time=float(t0) if t0 is not None else None,
        name=str(data.get("name", "")), description=str(data.get("description", "")),
    )


def _read_text(path) -> tuple[str, str]:
    p = str(path)
    if p.startswith(BUILTIN_PREFIX):
        name = p[len(BUILTIN_PREFIX):]
        res = resources.files("conhist") / "data" / f"{name}.json"
        if not res.is_file():
            raise ScenarioParseError(f"no built-in file named {name!r}; available: "
                                     + ", ".join(builtin_names()))
        return res.read_text(), p
    try:
        return Path(p).read_text(), p
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {p}: {exc.strerror}") from None


def read_json(path) -> Any:
    text, where = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{where}: {exc.msg}", exc.lineno, exc.colno) from None


def load_scenario(path) -> Scenario:
    """Parse and fully validate a scenario file (or ``builtin:<name>``)."""
    return scenario_from_dict(read_json(path))


def builtin_names() -> list[str]:
    d = resources.files("conhist") / "data"
    return sorted(f.name[:-5] for f in d.iterdir() if f.name.endswith(".json"))


# ----------------------------------------------------------------------------- writing

def _cjson(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(m) -> list:
    return [[_cjson(z) for z in row] for row in np.asarray(m)]


def _decomposition_json(d: DecompositionOfUnity) -> dict:
    return {"projectors": [matrix_to_json(p.matrix) for p in d], "names": list(d.names)}


def _tree_json(node: BranchNode) -> dict:
    out = {"decomposition": _decomposition_json(node.decomposition)}
    if node.children:
        out["children"] = [_tree_json(c) for c in node.children]
    return out


def scenario_to_dict(s: Scenario) -> dict:
    out: dict[str, Any] = {"name": s.name, "description": s.description, "dimension": s.dimension,
                           "hamiltonian": matrix_to_json(s.hamiltonian)}
    if s.initial_time is not None:
        out["initial_time"] = s.initial_time
    out["initial_state"] = {"density": matrix_to_json(s.initial_state.matrix)}
    if s.final_state is not None:
        out["final_state"] = {"density": matrix_to_json(s.final_state.matrix)}
    out["times"] = list(s.times)
    if s.decompositions is not None:
        out["decompositions"] = [_decomposition_json(d) for d in s.decompositions]
    else:
        out["branch_tree"] = _tree_json(s.branch_tree)
    return out


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1) + "\n")
