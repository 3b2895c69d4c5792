import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from procdisc.errors import LabelError, ValidationError
from procdisc.quantum_networks import (
    ChoiMatrix,
    Comb,
    Instrument,
    Tester as QuantumTester,
    choi_of_channel,
    choi_of_map,
    is_comb,
    is_nonsignalling,
    link_product,
    random_channel,
    random_state,
    random_unitary,
    state_as_choi,
    validate_instrument,
    validate_tester,
)
from procdisc.tensor_core import HermitianOperator, labels_of, partial_trace, tensor

A, B, C = labels_of(("A", 2), ("B", 2), ("C", 3))


def test_identity_channel_choi_is_unnormalized_bell_projector():
    ch = choi_of_channel(np.eye(2), [A], [B])
    phi = np.array([1, 0, 0, 1])
    np.testing.assert_allclose(ch.op.data, np.outer(phi, phi), atol=1e-15)
    assert ch.op.names == ("B", "A")
    assert ch.tp_residual() < 1e-15


def test_choi_of_channel_matches_choi_of_map(rng):
    ch = random_channel(rng, [A], [C])
    via_map = choi_of_map(ch.apply, [A], [C])
    np.testing.assert_allclose(via_map.op.data, ch.op.data, atol=1e-12)


def test_apply_reproduces_kraus_action(rng):
    u = random_unitary(rng, 2)
    ch = choi_of_channel(u, [A], [B])
    rho = random_state(rng, [A]).data
    np.testing.assert_allclose(ch.apply(rho), u @ rho @ u.conj().T, atol=1e-12)


def test_kraus_shape_is_checked():
    with pytest.raises(ValidationError):
        choi_of_channel(np.eye(3), [A], [B])


def test_in_out_labels_must_partition():
    op = HermitianOperator((A, B), np.eye(4))
    with pytest.raises(LabelError):
        ChoiMatrix(op, ("A",), ("A",))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_link_product_composes_channels(seed):
    rng = np.random.default_rng(seed)
    f = random_channel(rng, [A], [B])
    g = random_channel(rng, [B], [C])
    composed = link_product(f, g)
    assert composed.in_labels == ("A",) and composed.out_labels == ("C",)
    rho = random_state(rng, [A]).data
    np.testing.assert_allclose(composed.apply(rho), g.apply(f.apply(rho)), atol=1e-10)
    assert composed.tp_residual() < 1e-10


def test_link_with_state_applies_channel(rng):
    rho = random_state(rng, [A])
    f = random_channel(rng, [A], [B])
    out = link_product(state_as_choi(rho), f)
    np.testing.assert_allclose(out.op.data, f.apply(rho.data), atol=1e-12)


def test_link_without_shared_systems_is_tensor(rng):
    f = random_channel(rng, [A], [B])
    rho = random_state(rng, [C])
    out = link_product(f, state_as_choi(rho))
    np.testing.assert_allclose(partial_trace(out.op, ["C"]).data, f.op.data, atol=1e-12)


class TestNonSignalling:
    labels = labels_of(("AI", 2), ("AO", 2), ("BI", 2), ("BO", 2))

    def product(self, rng):
        ai, ao, bi, bo = self.labels
        fa = random_channel(rng, [ai], [ao])
        fb = random_channel(rng, [bi], [bo])
        return tensor(fa.op, fb.op)

    def test_product_channels_pass(self, rng):
        assert is_nonsignalling(self.product(rng))

    def test_signalling_channel_fails(self):
        ai, ao, bi, bo = self.labels
        # AI -> BO wire and BI -> AO wire: both parties signal
        swap = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                swap[j * 2 + i, i * 2 + j] = 1.0
        ch = choi_of_channel(swap, [ai, bi], [ao, bo])
        check = is_nonsignalling(ch)
        assert not check
        assert check.residuals["marginal_a"] > 0.1 and check.residuals["tp"] < 1e-12

    def test_wrong_labels(self):
        with pytest.raises(LabelError):
            is_nonsignalling(HermitianOperator(labels_of(("X", 4)), np.eye(4)))


class TestCombsAndTesters:
    def test_channel_is_one_tooth_comb(self, rng):
        ch = random_channel(rng, [A], [B])
        assert is_comb(ch.op, [("A", "B")])

    def test_scaled_channel_fails_normalization(self, rng):
        ch = random_channel(rng, [A], [B])
        assert not is_comb(ch.op * 2.0, [("A", "B")])

    def test_teeth_must_cover_labels(self, rng):
        ch = random_channel(rng, [A], [B])
        with pytest.raises(LabelError):
            is_comb(ch.op, [("A", None)])

    def test_measurement_tester(self, rng):
        # a state on A followed by a two-outcome measurement: teeth (None, A) then (A', None)
        rho = random_state(rng, [A])
        d = labels_of(("D", 2))[0]
        proj = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        total = tensor(rho, HermitianOperator((d,), np.eye(2)))
        elements = tuple(tensor(rho, HermitianOperator((d,), p)) for p in proj)
        comb = Comb(total, ((None, "A"), ("D", None)))
        assert validate_tester(QuantumTester(elements, comb))

    def test_instrument(self, rng):
        u = random_unitary(rng, 2)
        parts = [choi_of_channel(np.diag([1.0, 0.0]) @ u, [A], [B]),
                 choi_of_channel(np.diag([0.0, 1.0]) @ u, [A], [B])]
        assert validate_instrument(Instrument(tuple(parts)))
        assert not validate_instrument(Instrument(tuple(parts[:1])))
        with pytest.raises(ValidationError):
            validate_instrument(Instrument(()))


def test_random_state_is_density_matrix(rng):
    rho = random_state(rng, [C], rank=2)
    w = rho.eigvalsh()
    assert w[0] > -1e-12 and abs(w.sum() - 1) < 1e-12
    assert np.sum(w > 1e-10) == 2
