"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run under pytest (lines are printed even with output capture on) or directly
with ``python3 tests/test_acceptance.py``.
"""

import os
import subprocess
import sys
import time
from functools import reduce
from itertools import combinations, product
from pathlib import Path

import numpy as np
import pytest

from conhist.decoherence import (
    check_consistency,
    collapse_oracle,
    decoherence_matrix,
    interference_decomposition,
    probabilities,
    time_symmetric_decoherence_matrix,
    validate_generalized_functional,
)
from conhist.families import are_compatible
from conhist.histories import TemporalSupport, coarse_grain, coarse_label_blocks, partition_matrix, product_family
from conhist.hpo import hpo_homogeneous, hpo_negate
from conhist.kinematics import (
    DecompositionOfUnity,
    DensityOperator,
    Dynamics,
    Projector,
    bloch_state,
    spin_decomposition,
)
from conhist.matrix_core import hermiticity_residual, max_norm
from conhist.psg import (
    check_causality,
    fold_compose,
    k1_compose,
    k1_finite_psg,
    k1_nuclear_decomposition,
    K1Element,
    k2_finite_psg,
    validate_finite_psg,
)
from conhist.sampling import random_blocks, random_decomposition, random_family, random_grouping, random_unitary
from conhist.scenarios import load_scenario

from conftest import PZM, PZP

SEED = 20240611
N_CORPUS = 500
ROOT = Path(__file__).resolve().parents[1]
RESULTS: dict[int, tuple[bool, str, float]] = {}


def report(n, ok, detail, elapsed):
    RESULTS[n] = (ok, detail, elapsed)
    return f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f} s]"


def spin_half(n0, n, nprime):
    # n' is asked at t1, n at t2
    return product_family(TemporalSupport((1.0, 2.0)), [spin_decomposition(nprime), spin_decomposition(n)],
                          Dynamics.free(2), bloch_state(n0))


def lhs(n0, n, nprime):
    return float(np.dot(np.cross(n, nprime), np.cross(n0, nprime)))


_corpus = None


def corpus():
    """The shared random corpus: dim <= 4, up to 4 times, random H and decompositions."""
    global _corpus
    if _corpus is None:
        rng = np.random.default_rng(SEED)
        _corpus = [random_family(rng, max_dim=4, max_times=4) for _ in range(N_CORPUS)]
    return _corpus


# ----------------------------------------------------------------------------- criteria

def criterion_1():
    z = np.array([0.0, 0.0, 1.0])
    t0 = time.perf_counter()
    f = spin_half(z, z, z)
    dm = decoherence_matrix(f)
    weak = check_consistency(dm, "weak").consistent
    p = probabilities(dm)
    # alpha = (+,+); beta is the other history ending in +, i.e. (-,+)
    pa, pb = p[(0, 0)], p[(1, 0)]
    rest = max(p[(0, 1)], p[(1, 1)])
    elapsed = time.perf_counter() - t0
    ok = weak and abs(pa - 1) <= 1e-12 and abs(pb) <= 1e-12 and rest <= 1e-12 and elapsed < 1.0
    return ok, f"case (i): weak-consistent={weak}, p(alpha)={pa:.12g}, p(beta)={pb:.3g}"


def _axes_with_lhs(target, rng):
    """Random unit triple with (n x n').(n0 x n') equal to ``target`` (|target| < 1)."""
    while True:
        th, ph = rng.uniform(0.2, np.pi - 0.2, size=2)
        c = target / (np.sin(th) * np.sin(ph))
        if abs(c) <= 1:
            break
    psi = np.arccos(c) * rng.choice([-1, 1])
    nprime = np.array([0.0, 0.0, 1.0])
    n = np.array([np.sin(th), 0.0, np.cos(th)])
    n0 = np.array([np.sin(ph) * np.cos(psi), np.sin(ph) * np.sin(psi), np.cos(ph)])
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return q @ n0, q @ n, q @ nprime


def sweep_triples(rng, n_random=1000, n_constructed=600):
    triples = []
    for _ in range(n_random):
        v = rng.normal(size=(3, 3))
        triples.append(tuple(x / np.linalg.norm(x) for x in v))
    for k in range(n_constructed):
        kind = k % 6
        if kind == 0:      # exactly consistent: n' parallel to n
            n0, n = (x / np.linalg.norm(x) for x in rng.normal(size=(2, 3)))
            triples.append((n0, n, n * rng.choice([-1, 1])))
        elif kind == 1:    # exactly consistent: n' parallel to n0
            n0, n = (x / np.linalg.norm(x) for x in rng.normal(size=(2, 3)))
            triples.append((n0, n, n0.copy()))
        elif kind == 2:    # consistent, tiny nonzero interference
            triples.append(_axes_with_lhs(10 ** rng.uniform(-14, -10.5) * rng.choice([-1, 1]), rng))
        elif kind == 3:    # inconsistent, just outside the guard band
            triples.append(_axes_with_lhs(10 ** rng.uniform(-7.9, -5) * rng.choice([-1, 1]), rng))
        elif kind == 4:    # inside the guard band (excluded from the agreement count)
            triples.append(_axes_with_lhs(10 ** rng.uniform(-10, -8) * rng.choice([-1, 1]), rng))
        else:              # generic, well away from the threshold
            triples.append(_axes_with_lhs(rng.uniform(-0.9, 0.9), rng))
    return triples


def criterion_2(eps=1e-9):
    rng = np.random.default_rng(SEED + 2)
    t0 = time.perf_counter()
    triples = sweep_triples(rng)
    agree = counted = guard = consistent_seen = 0
    disagreements = []
    for n0, n, nprime in triples:
        value = abs(lhs(n0, n, nprime))
        if 10 ** -10 <= value <= 10 ** -8:
            guard += 1
            continue
        verdict = check_consistency(decoherence_matrix(spin_half(n0, n, nprime)), "weak", eps).consistent
        analytic = value <= eps
        counted += 1
        consistent_seen += analytic
        if verdict == analytic:
            agree += 1
        else:
            disagreements.append(value)
    elapsed = time.perf_counter() - t0
    ok = counted >= 1000 and agree == counted and elapsed < 10.0
    return ok, (f"{agree}/{counted} verdicts agree ({consistent_seen} analytically consistent, "
                f"{guard} guard-band triples excluded)")


def criterion_3():
    a = load_scenario("builtin:spin_half_case_ii_a").family()
    b = load_scenario("builtin:spin_half_case_ii_b").family()
    ca = check_consistency(decoherence_matrix(a)).consistent
    cb = check_consistency(decoherence_matrix(b)).consistent
    rep = are_compatible(a, b)
    ok = ca and cb and rep.relation == "complementary" and not rep.compatible
    return ok, f"(a) consistent={ca}, (b) consistent={cb}, relation={rep.relation}"


def criterion_4():
    worst = 0.0
    n_hist = 0
    for f in corpus():
        diag = decoherence_matrix(f).diagonal
        for lab, p in zip(f.labels, diag):
            worst = max(worst, abs(collapse_oracle(f, lab) - p))
            n_hist += 1
    return worst <= 1e-10, f"{len(corpus())} scenarios, {n_hist} histories, max |oracle - d(a,a)| = {worst:.2e}"


def criterion_5():
    rng = np.random.default_rng(SEED + 5)
    herm = low = sum_err = biadd = 0.0
    eig = np.inf
    for f in corpus():
        dm = decoherence_matrix(f)
        herm = max(herm, hermiticity_residual(dm.entries))
        low = min(low, float(dm.diagonal.min()))
        sum_err = max(sum_err, abs(dm.entries.sum() - 1))
        eig = min(eig, dm.min_eigenvalue())
        g = coarse_grain(f, random_grouping(f, rng))
        rep = validate_generalized_functional(dm, coarse_label_blocks(g, f), decoherence_matrix(g))
        biadd = max(biadd, rep.notes["biadditivity_residual"])
    ok = herm <= 1e-10 and low >= -1e-10 and sum_err <= 1e-9 and eig >= -1e-9 and biadd <= 1e-10
    return ok, (f"hermiticity {herm:.1e}, min diag {low:.1e}, |sum-1| {sum_err:.1e}, "
                f"min eig {eig:.1e}, biadditivity {biadd:.1e}")


def _or_probability(f, a, b, j):
    """p(a or b) from the family coarse-grained at time j (outcomes a[j], b[j] merged)."""
    m = len(f.decompositions[j])
    merged = sorted((a[j], b[j]))
    blocks = [merged] + [[k] for k in range(m) if k not in merged]
    g = coarse_grain(f, {j: partition_matrix(blocks, m)})
    lab = tuple(0 if i == j else a[i] for i in range(len(a)))
    return decoherence_matrix(g)(lab, lab).real


def _single_difference_pairs(f, limit=6):
    """Up to ``limit`` pairs differing at exactly one time (each needs its own coarse family)."""
    found = 0
    for a, b in combinations(f.labels, 2):
        diff = [j for j in range(len(a)) if a[j] != b[j]]
        if len(diff) == 1:
            yield a, b, diff[0]
            found += 1
            if found == limit:
                return


def _commuting_family(rng):
    """Consistent by construction: H, rho and every projector share one eigenbasis."""
    dim = int(rng.integers(2, 5))
    u = random_unitary(dim, rng)
    n = int(rng.integers(2, 5))
    decs = []
    for _ in range(n):
        blocks = random_blocks(dim, rng, int(rng.integers(2, dim + 1)))
        decs.append(DecompositionOfUnity(tuple(
            Projector(u[:, bl] @ u[:, bl].conj().T, str(k)) for k, bl in enumerate(blocks))))
    h = u @ np.diag(rng.normal(size=dim)) @ u.conj().T
    w = rng.dirichlet(np.ones(dim))
    rho = DensityOperator(u @ np.diag(w) @ u.conj().T)
    return product_family(TemporalSupport(tuple(np.arange(1.0, n + 1))), decs, Dynamics(h), rho)


def criterion_6():
    rng = np.random.default_rng(SEED + 6)
    cons_worst = incons_worst = 0.0
    n_cons = n_incons = 0
    # consistent pairs: commuting families plus the consistent spin-half cases
    fams = [_commuting_family(rng) for _ in range(60)]
    fams += [load_scenario(f"builtin:{n}").family() for n in ("spin_half_case_i", "spin_half_case_ii_a")]
    for f in fams:
        dm = decoherence_matrix(f)
        for a, b, j in _single_difference_pairs(f):
            if abs(dm(a, b).real) > 1e-8:
                continue
            p_or = _or_probability(f, a, b, j)
            cons_worst = max(cons_worst, abs(p_or - dm(a, a).real - dm(b, b).real))
            n_cons += 1
    # engineered inconsistent pairs: random dynamics, pairs differing before the last time
    for f in corpus()[:200]:
        dm = decoherence_matrix(f)
        for a, b, j in _single_difference_pairs(f, limit=12):
            cross = 2 * dm(a, b).real
            if abs(cross) <= 1e-6 or j == len(a) - 1:
                continue
            p_or = _or_probability(f, a, b, j)
            rec = interference_decomposition(f, a, b)
            incons_worst = max(incons_worst, abs((p_or - dm(a, a).real - dm(b, b).real) - cross),
                               abs(rec.residual - cross))
            n_incons += 1
    ok = n_cons > 0 and n_incons > 0 and cons_worst <= 1e-9 and incons_worst <= 1e-10
    return ok, (f"{n_cons} consistent pairs, max |p(or)-p(a)-p(b)| = {cons_worst:.1e}; "
                f"{n_incons} inconsistent pairs, max |residual - 2 Re d| = {incons_worst:.1e}")


def criterion_7():
    worst = 0.0
    for f in corpus():
        flat = f.with_state(f.initial_state, DensityOperator(np.eye(f.dim) / f.dim))
        ts = time_symmetric_decoherence_matrix(flat)
        std = decoherence_matrix(f)
        worst = max(worst, max_norm(ts.diagonal - std.diagonal), max_norm(ts.entries - std.entries))
    return worst <= 1e-10, f"max |d_ts - d| = {worst:.1e} over {len(corpus())} scenarios"


def criterion_8():
    rng = np.random.default_rng(SEED + 8)
    worst_orth = worst_sum = 0.0
    count = 0
    for n in (2, 3):
        for _ in range(40):
            d = int(rng.integers(2, 5))
            slots = [random_decomposition(d, rng)[0].matrix for _ in range(n)]
            p = hpo_homogeneous(slots)
            neg = hpo_negate(p)
            mats = [reduce(np.kron, t) for t in neg.terms]
            if len(mats) != 2 ** n - 1:
                return False, f"expected {2 ** n - 1} terms, got {len(mats)}"
            for x, y in combinations(mats, 2):
                worst_orth = max(worst_orth, max_norm(x @ y))
            worst_sum = max(worst_sum, max_norm(sum(mats) - (np.eye(d ** n) - p.matrix)))
            count += 1
    ok = worst_orth <= 1e-12 and worst_sum <= 1e-12
    return ok, f"{count} projectors, max |T_i T_j| = {worst_orth:.1e}, max |sum - (I - P)| = {worst_sum:.1e}"


def criterion_9():
    problems = []
    projs = [Projector(PZP, "z+"), Projector(PZM, "z-")]
    for n in range(1, 5):
        times = list(range(1, n + 1))
        k1p = k1_finite_psg(times, 4)
        for s, t, u in product(k1p.elements, repeat=3):
            st, tu = k1_compose(s, t), k1_compose(t, u)
            if st is not None and tu is not None and k1_compose(st, u) != k1_compose(s, tu):
                problems.append(f"K1 associativity {s}{t}{u}")
        if not validate_finite_psg(k1p).notes["directed"]:
            problems.append(f"K1 not directed over {n} times")
        hist, sigma, supp = k2_finite_psg(times, projs, 4)
        rep = validate_finite_psg(hist, max_elements=len(hist.elements))
        if not rep.ok or not rep.notes["directed"]:
            problems.append(f"K2 laws over {n} times: {rep.issues[:2]}")
        for s, t in combinations(hist.elements, 2):
            if hist.compose(s, t) is not None and hist.compose(t, s) is not None:
                problems.append("K2 undirected pair")
        if not check_causality(hist, sigma, supp).ok:
            problems.append(f"K2 causality over {n} times")
        if not check_causality(k1p, {e: e for e in k1p.elements}, k1p).ok:
            problems.append(f"K1 causality over {n} times")
        for e in k1p.elements:
            if fold_compose(k1_nuclear_decomposition(e), k1_compose) != e:
                problems.append(f"round trip {e}")
    # round trip on longer supports with irregular times
    rng = np.random.default_rng(SEED + 9)
    for _ in range(200):
        t = K1Element(tuple(np.sort(rng.uniform(-10, 10, size=int(rng.integers(1, 12))))))
        if fold_compose(k1_nuclear_decomposition(t), k1_compose) != t:
            problems.append(f"round trip {t}")
    from conhist.cli import load_psg
    p, sigma, support = load_psg("builtin:psg_causal_loop")
    loop_flagged = "causality" in check_causality(p, sigma, support).kinds()
    if not loop_flagged:
        problems.append("loop counterexample not flagged")
    return not problems, ("K1/K2 laws hold over supports of length <= 4, round trip exact, loop flagged"
                          if not problems else "; ".join(problems[:3]))


def criterion_10():
    """Wall time of the rest of the suite plus the acceptance criteria above."""
    if os.environ.get("CONHIST_ACCEPTANCE_INNER"):
        return True, "skipped inside the timing run"
    env = dict(os.environ, CONHIST_ACCEPTANCE_INNER="1")
    t0 = time.perf_counter()
    r = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                        "--ignore", str(ROOT / "tests" / "test_acceptance.py"), str(ROOT / "tests")],
                       cwd=ROOT, env=env, capture_output=True, text=True)
    rest = time.perf_counter() - t0
    own = sum(e for k, (_, _, e) in RESULTS.items() if k != 10)
    total = rest + own
    tail = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr[-200:]
    return r.returncode == 0 and total < 60.0, f"suite {rest:.1f} s + acceptance {own:.1f} s = {total:.1f} s ({tail})"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def run_criterion(n):
    t0 = time.perf_counter()
    ok, detail = CRITERIA[n]()
    return ok, report(n, ok, detail, time.perf_counter() - t0)


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, line = run_criterion(n)
    with capsys.disabled():
        print("\n" + line, end="")
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        ok, line = run_criterion(n)
        print(line, flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
