import numpy as np
import pytest

from procdisc.discrimination import (
    Strategy,
    base_norm,
    build_realization,
    classify,
    distance_to_class,
    p_adapt,
    p_succ,
    p_succ_free,
    solve_adaptive,
)
from procdisc.errors import LabelError, ValidationError
from procdisc.process_matrices import (
    ProcessClass,
    ProcessMatrix,
    comb_ab_residuals,
    free_residual,
    make_cns_example,
    make_free,
    maximally_mixed,
    party_labels,
    random_comb_ab,
    random_process_matrix,
    swap_parties,
    validate_def1,
)
from procdisc.quantum_networks import random_state
from procdisc.tensor_core import HermitianOperator, labels_of, partial_trace, trace_norm

CNS = make_cns_example()
MIXED = maximally_mixed()


def reference_p_succ(w0, w1):
    """The same optimum written directly in a general-purpose modelling tool."""
    cp = pytest.importorskip("cvxpy")
    s0 = cp.Variable((16, 16), hermitian=True)
    s1 = cp.Variable((16, 16), hermitian=True)
    n = s0 + s1  # factor order AI, AO, BI, BO

    def ptr(x, dims, axis):
        return cp.partial_trace(x, dims, axis=axis)

    n_a = ptr(n, [2, 2, 2, 2], 1)                       # tr_AO: AI, BI, BO
    n_b = ptr(n, [2, 2, 2, 2], 3)                       # tr_BO: AI, AO, BI
    cons = [
        s0 >> 0,
        s1 >> 0,
        ptr(n_b, [2, 2, 2], 1) == np.eye(4),            # trace preserving
        n_a == cp.kron(np.eye(2) / 2, ptr(n_a, [2, 2, 2], 0)),
        n_b == cp.kron(ptr(n_b, [2, 2, 2], 2), np.eye(2) / 2),
    ]
    obj = cp.Maximize(0.5 * cp.real(cp.trace(w0.data @ s0) + cp.trace(w1.data @ s1)))
    prob = cp.Problem(obj, cons)
    prob.solve(solver="CLARABEL")
    return prob.value


class TestPSucc:
    def test_identical_pair_is_half(self):
        res = p_succ(CNS, CNS)
        assert res.p_succ == pytest.approx(0.5, abs=1e-7)

    def test_cns_against_mixed_matches_reference(self):
        res = p_succ(CNS, MIXED)
        assert res.p_succ == pytest.approx(reference_p_succ(CNS, MIXED), abs=1e-6)
        assert res.strategy.is_feasible()
        assert res.strategy.success_probability(CNS, MIXED) == pytest.approx(res.p_succ, abs=1e-7)

    def test_certificate_bounds_the_value(self):
        res = p_succ(CNS, MIXED)
        cert = res.certificate
        assert cert.violation(CNS.op * 0.5, MIXED.op * 0.5) < 1e-7
        # any feasible strategy scores at most alpha * dAI * dBI
        assert cert.alpha * 4 == pytest.approx(res.p_succ, abs=1e-6)
        assert res.gap < 1e-7

    def test_symmetric_in_arguments(self, rng):
        w0, w1 = random_process_matrix(rng), random_process_matrix(rng)
        assert p_succ(w0, w1).p_succ == pytest.approx(p_succ(w1, w0).p_succ, abs=1e-7)

    def test_label_mismatch(self):
        other = maximally_mixed((2, 3, 2, 2))
        with pytest.raises(LabelError):
            p_succ(MIXED, other)

    def test_rejects_invalid_operand(self):
        bad = HermitianOperator(party_labels(), np.eye(16))
        with pytest.raises(ValidationError):
            p_succ(bad, MIXED)

    def test_free_reduction_unequal_dims(self, rng):
        lab = labels_of(("AI", 2), ("BI", 2))
        rho, sigma = random_state(rng, lab), random_state(rng, lab)
        w0, w1 = make_free(rho, d_ao=3, d_bo=2), make_free(sigma, d_ao=3, d_bo=2)
        assert p_succ(w0, w1).p_succ == pytest.approx(p_succ_free(rho, sigma), abs=1e-6)
        assert p_succ_free(rho, sigma) == pytest.approx(0.5 + 0.25 * trace_norm(rho - sigma))

    def test_p_succ_free_rejects_non_states(self):
        lab = labels_of(("AI", 2), ("BI", 2))
        with pytest.raises(ValidationError):
            p_succ_free(HermitianOperator(lab, np.eye(4)), HermitianOperator(lab, np.eye(4) / 4))


class TestBaseNorm:
    def test_zero(self):
        assert base_norm(HermitianOperator(party_labels(), np.zeros((16, 16)))) == 0.0

    def test_homogeneous(self):
        x = CNS.op - MIXED.op
        assert base_norm(x * 2.0) == pytest.approx(2 * base_norm(x), abs=1e-6)

    def test_matches_discrimination(self):
        assert base_norm(CNS.op - MIXED.op) == pytest.approx(4 * p_succ(CNS, MIXED).p_succ - 2, abs=1e-6)


class TestAdaptive:
    def test_first_step_is_a_state_times_identity(self, rng):
        w0, w1 = random_comb_ab(rng), random_comb_ab(rng)
        res = solve_adaptive(w0, w1)
        j = res.first_step()
        assert j.names == ("AI", "AO")
        assert j.real_trace() == pytest.approx(2.0, abs=1e-7)
        assert np.linalg.eigvalsh(j.data)[0] > -1e-7
        total = res.l0 + res.l1
        tr_bo = partial_trace(total, ["BO"])
        np.testing.assert_allclose(tr_bo.data, np.kron(j.data, np.eye(2)), atol=1e-7)

    def test_adaptive_matches_general(self, rng):
        w0, w1 = random_comb_ab(rng), random_comb_ab(rng)
        assert p_adapt(w0, w1) == pytest.approx(p_succ(w0, w1).p_succ, abs=1e-6)

    def test_requires_ordered_operands(self, rng):
        w = random_comb_ab(rng)
        with pytest.raises(ValidationError):
            solve_adaptive(w, swap_parties(w))


class TestDistances:
    @pytest.mark.parametrize("cls", ["free", "comb-ab", "comb-ba", "sep"])
    def test_member_has_zero_distance(self, cls):
        res = distance_to_class(MIXED, cls)
        assert abs(res.distance) < 1e-6

    def test_comb_has_zero_comb_distance_positive_free_distance(self, rng):
        w = random_comb_ab(rng)
        assert abs(distance_to_class(w, "comb-ab").distance) < 1e-6
        assert distance_to_class(w, "free").distance > 1e-3

    def test_closest_member_is_in_class(self):
        res = distance_to_class(CNS, ProcessClass.FREE)
        assert validate_def1(res.closest.op, 1e-6)
        assert free_residual(res.closest.op) < 1e-8
        res = distance_to_class(CNS, "comb-ab")
        assert max(comb_ab_residuals(res.closest.op).values()) < 1e-8
        assert res.cross_check == pytest.approx(res.distance, abs=1e-6)

    def test_separable_weight(self):
        res = distance_to_class(CNS, "sep")
        assert 0.0 <= res.components["weight_ab"] <= 1.0
        assert res.witness is res.certificate

    def test_unknown_class(self):
        with pytest.raises(ValueError):
            distance_to_class(CNS, "quantum-switch")

    def test_rejects_invalid(self):
        with pytest.raises(ValidationError):
            distance_to_class(HermitianOperator(party_labels(), np.eye(16)), "free")


class TestClassify:
    def test_examples(self, rng):
        assert classify(MIXED) is ProcessClass.FREE
        w = random_comb_ab(rng)
        assert classify(w) is ProcessClass.COMB_AB
        assert classify(swap_parties(w)) is ProcessClass.COMB_BA
        mix = ProcessMatrix((w.op + swap_parties(random_comb_ab(rng)).op) * 0.5)
        assert classify(mix) is ProcessClass.SEPARABLE
        assert classify(CNS) is ProcessClass.UNCLASSIFIED


class TestRealization:
    def test_replay_and_effects(self):
        res = p_succ(CNS, MIXED)
        real = build_realization(res.strategy.total, CNS, MIXED, res.strategy)
        assert real.probability(CNS, MIXED) == pytest.approx(res.p_succ, abs=1e-6)
        np.testing.assert_allclose(real.q0.data + real.q1.data, np.eye(16), atol=1e-12)
        for q in (real.q0, real.q1):
            assert np.linalg.eigvalsh(q.data)[0] > -1e-6
        eff = real.effective_strategy()
        np.testing.assert_allclose(eff.s0.data, res.strategy.s0.data, atol=1e-6)
        assert real.k.names[:4] == real.ancilla

    def test_helstrom_split_without_strategy(self):
        res = p_succ(CNS, MIXED)
        real = build_realization(res.strategy.total, CNS, MIXED)
        assert real.probability(CNS, MIXED) >= res.p_succ - 1e-6

    def test_rejects_signalling_total(self):
        bad = HermitianOperator(party_labels(), np.eye(16) * 2)
        with pytest.raises(ValidationError):
            build_realization(bad, CNS, MIXED)


def test_strategy_residuals_flag_infeasible():
    s = Strategy(HermitianOperator(party_labels(), np.eye(16)), HermitianOperator(party_labels(), -np.eye(16) * 0.5))
    res = s.residuals()
    assert res["psd_s1"] == pytest.approx(0.5)
    assert not s.is_feasible()
