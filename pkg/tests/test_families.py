import numpy as np
import pytest

from conhist.decoherence import check_consistency, decoherence_matrix
from conhist.errors import DomainError, InconsistentFamilyError, UnsupportedStructureError
from conhist.families import are_compatible, common_refinement, find_obstruction, is_refinement
from conhist.histories import TemporalSupport, branch_dependent_family, coarse_grain, product_family
from conhist.kinematics import DecompositionOfUnity, DensityOperator, Dynamics, Projector, bloch_state, spin_decomposition
from conhist.scenarios import load_scenario
from conhist.sampling import random_family, random_grouping

from conftest import X, Y, Z


def qutrit_family(decomps, times=(1.0, 2.0)):
    return product_family(TemporalSupport(times), decomps, Dynamics.free(3), DensityOperator(np.eye(3) / 3))


def basis(*blocks):
    projs = []
    for b in blocks:
        m = np.zeros((3, 3))
        for k in b:
            m[k, k] = 1
        projs.append(Projector(m, "".join(map(str, b))))
    return DecompositionOfUnity(tuple(projs))


def case_ii():
    a = load_scenario("builtin:spin_half_case_ii_a").family()
    b = load_scenario("builtin:spin_half_case_ii_b").family()
    return a, b


def test_refinement_reflexive(rng):
    for _ in range(10):
        f = random_family(rng)
        assert is_refinement(f, f)


def test_refinement_chain_transitive(rng):
    for _ in range(15):
        f = random_family(rng)
        g = coarse_grain(f, random_grouping(f, rng))
        h = coarse_grain(g, random_grouping(g, rng))
        assert is_refinement(f, g) and is_refinement(g, h) and is_refinement(f, h)


def test_refinement_strict_coarse_graining():
    fine = qutrit_family([basis([0], [1], [2]), basis([0], [1], [2])])
    coarse = qutrit_family([basis([0, 1], [2]), basis([0], [1], [2])])
    assert is_refinement(fine, coarse)
    assert not is_refinement(coarse, fine)


def test_refinement_needs_support_superset(z_decomp):
    f = product_family(TemporalSupport((1, 2)), [z_decomp, z_decomp], Dynamics.free(2), bloch_state(Z))
    g = product_family(TemporalSupport((1,)), [z_decomp], Dynamics.free(2), bloch_state(Z))
    assert is_refinement(f, g)
    assert not is_refinement(g, f)


def test_case_ii_obstruction_and_no_refinement():
    a, b = case_ii()
    obs = find_obstruction(a, b)
    assert obs is not None and obs.time == 1.0
    assert obs.commutator_norm > 0.1
    assert common_refinement(a, b) is None
    assert "does not commute" in str(obs)


def test_case_ii_complementary():
    a, b = case_ii()
    assert check_consistency(decoherence_matrix(a)).consistent
    assert check_consistency(decoherence_matrix(b)).consistent
    rep = are_compatible(a, b)
    assert rep.relation == "complementary"
    assert not rep.compatible
    assert rep.witness is None and rep.obstruction
    assert are_compatible(b, a).relation == "complementary"


def test_self_compatible(rng):
    f = product_family(TemporalSupport((1, 2)), [spin_decomposition(Z), spin_decomposition(X)],
                       Dynamics.free(2), bloch_state(Z))
    rep = are_compatible(f, f)
    assert rep.compatible and rep.witness is f
    assert common_refinement(f, f) is f


def test_two_coarse_grainings_compatible():
    fine = qutrit_family([basis([0], [1], [2]), basis([0], [1], [2])])
    g1 = coarse_grain(fine, {0: [[1, 1, 0], [0, 0, 1]]})
    g2 = coarse_grain(fine, {1: [[1, 0, 0], [0, 1, 1]]})
    rep = are_compatible(g1, g2)
    assert rep.relation == "compatible"
    w = rep.witness
    assert is_refinement(w, fine) and is_refinement(fine, w)
    assert is_refinement(w, g1) and is_refinement(w, g2)


def test_refines_and_coarsens_labels():
    fine = qutrit_family([basis([0], [1], [2]), basis([0], [1], [2])])
    coarse = coarse_grain(fine, {0: [[1, 1, 0], [0, 0, 1]]})
    assert are_compatible(fine, coarse).relation == "refines"
    assert are_compatible(coarse, fine).relation == "coarsens"


def test_common_refinement_interleaves_supports(z_decomp, x_decomp):
    f1 = product_family(TemporalSupport((1,)), [z_decomp], Dynamics.free(2), bloch_state(Z))
    f2 = product_family(TemporalSupport((2,)), [x_decomp], Dynamics.free(2), bloch_state(Z))
    w = common_refinement(f1, f2)
    assert w.support.times == (1.0, 2.0)
    assert is_refinement(w, f1) and is_refinement(w, f2)
    assert are_compatible(f1, f2).relation == "compatible"


def test_common_refinement_records_impossible():
    f1 = qutrit_family([basis([0, 1], [2])], times=(1.0,))
    f2 = qutrit_family([basis([0], [1, 2])], times=(1.0,))
    w = common_refinement(f1, f2)
    assert len(w.decompositions[0]) == 3
    assert (1.0, "2", "0") in w.impossible
    assert is_refinement(w, f1) and is_refinement(w, f2)


def test_incompatible_when_refinement_inconsistent():
    # each family is a single time; together they interfere
    nprime = (X + Z) / np.sqrt(2)
    f1 = product_family(TemporalSupport((1,)), [spin_decomposition(nprime)], Dynamics.free(2), bloch_state(Z))
    f2 = product_family(TemporalSupport((2,)), [spin_decomposition(X)], Dynamics.free(2), bloch_state(Z))
    rep = are_compatible(f1, f2)
    assert rep.relation == "incompatible"
    assert rep.witness is None
    assert are_compatible(f2, f1).relation == "incompatible"


def test_inconsistent_input_rejected():
    bad = load_scenario("builtin:spin_half_inconsistent").family()
    with pytest.raises(InconsistentFamilyError):
        are_compatible(bad, bad)


def test_mismatched_kinematics(z_decomp):
    f1 = product_family(TemporalSupport((1,)), [z_decomp], Dynamics.free(2), bloch_state(Z))
    f2 = product_family(TemporalSupport((1,)), [z_decomp], Dynamics.free(2), bloch_state(Y))
    with pytest.raises(DomainError):
        common_refinement(f1, f2)


def test_branch_dependent_unsupported(z_decomp):
    f = branch_dependent_family(TemporalSupport((1,)), lambda p: z_decomp, Dynamics.free(2), bloch_state(Z))
    with pytest.raises(UnsupportedStructureError):
        is_refinement(f, f)


def test_witness_refines_both_random(rng):
    for _ in range(15):
        f = random_family(rng)
        g1 = coarse_grain(f, random_grouping(f, rng))
        g2 = coarse_grain(f, random_grouping(f, rng))
        w = common_refinement(g1, g2)
        assert w is not None
        assert is_refinement(w, g1) and is_refinement(w, g2)


def test_compatibility_symmetric_random(rng):
    verdicts = set()
    for _ in range(30):
        f = random_family(rng, max_dim=3, max_times=2)
        # commuting and non-commuting partners, each rebound to the same kinematics
        g = coarse_grain(f, random_grouping(f, rng))
        other = random_family(rng, max_dim=3, max_times=2)
        pairs = [(f, g)]
        if other.dim == f.dim:
            h = product_family(other.support, other.decompositions, f.dynamics, f.initial_state)
            pairs.append((f, h))
        for a, b in pairs:
            try:
                r1 = are_compatible(a, b, epsilon=1e-6)
            except InconsistentFamilyError:
                with pytest.raises(InconsistentFamilyError):
                    are_compatible(b, a, epsilon=1e-6)
                verdicts.add("inconsistent input")
                continue
            r2 = are_compatible(b, a, epsilon=1e-6)
            assert r1.compatible == r2.compatible
            assert {r1.relation, r2.relation} in ({"refines", "coarsens"}, {r1.relation})
            verdicts.add(r1.relation)
    assert len(verdicts) >= 2
