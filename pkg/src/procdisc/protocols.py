"""Perfect discrimination of the two causal orders of a simple comb family.

``W_ab = rho_AI (x) |U>><<U|_{AO BI} (x) 1_BO`` sends Alice's output to
Bob's input through ``X -> U^T X conj(U)``; ``W_ba`` is its party swap.
Both parties measure in the eigenbasis ``{|x_i>}`` of ``rho``, record the
outcome, and re-prepare the measured vector pre-compensated by ``conj(U)``.
Bob first shifts ``|x_i> -> |x_{i+1}>`` (indices mod d).  The two orders
then leave the registers in disjoint supports.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LabelError, ValidationError
from .process_matrices import AI, AO, BI, BO, ProcessMatrix, canonical, party_labels, swap_parties
from .quantum_networks import ChoiMatrix, choi_of_channel, random_state, random_unitary
from .tensor_core import (
    HermitianOperator,
    SystemLabel,
    hermitian_eig,
    tensor,
    vectorize,
)

ORDERS = ("AB", "BA")


@dataclass(frozen=True)
class PerfectPair:
    w_ab: ProcessMatrix
    w_ba: ProcessMatrix
    rho: np.ndarray
    unitary: np.ndarray
    basis: np.ndarray  # columns are the eigenvectors |x_i> of rho, ascending eigenvalues
    shift: np.ndarray  # sum_i |x_{i+1}><x_i|

    @property
    def d(self) -> int:
        return self.rho.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.real(np.einsum("ij,jk,ki->i", self.basis.conj().T, self.rho, self.basis))


def make_perfect_pair(rho, unitary, tol: float = 1e-9) -> PerfectPair:
    rho = np.asarray(rho.data if isinstance(rho, HermitianOperator) else rho, dtype=complex)
    u = np.asarray(unitary, dtype=complex)
    d = rho.shape[0]
    if rho.shape != (d, d) or u.shape != (d, d):
        raise LabelError(f"rho {rho.shape} and U {u.shape} must both be d x d")
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > tol:
        raise ValidationError("U is not unitary")
    labels = party_labels(d, d, d, d)
    rho_op = HermitianOperator(labels[:1], rho)
    if abs(rho_op.real_trace() - 1) > tol or rho_op.eigvalsh()[0] < -tol:
        raise ValidationError("rho is not a state")
    _, basis = hermitian_eig(rho_op)
    shift = basis @ np.roll(np.eye(d), 1, axis=0) @ basis.conj().T
    vu = vectorize(u)
    w = tensor(tensor(rho_op, HermitianOperator(labels[1:3], np.outer(vu, vu.conj()))),
               HermitianOperator(labels[3:], np.eye(d)))
    w_ab = ProcessMatrix.from_operator(HermitianOperator(w.labels, w.data), tol=1e-8)
    return PerfectPair(w_ab, swap_parties(w_ab), rho, u, basis, shift)


def random_perfect_pair(rng: np.random.Generator, d: int = 2) -> PerfectPair:
    rho = random_state(rng, (SystemLabel(AI, d),))
    return make_perfect_pair(rho.data, random_unitary(rng, d))


def _local_kraus(pp: PerfectPair, pre: np.ndarray) -> list[np.ndarray]:
    """``|i> (x) conj(U)|x_i><x_i| pre`` for every outcome ``i``."""
    d = pp.d
    out = []
    for i in range(d):
        reg = np.zeros((d, 1))
        reg[i] = 1.0
        x = pp.basis[:, i:i + 1]
        out.append(np.kron(reg, pp.unitary.conj() @ x @ x.conj().T @ pre))
    return out


def _channel(pp: PerfectPair, pre, inp: str, out: str, register: str) -> ChoiMatrix:
    d = pp.d
    return choi_of_channel(_local_kraus(pp, pre), (SystemLabel(inp, d),),
                           (SystemLabel(register, d), SystemLabel(out, d)))


def alice_channel(pp: PerfectPair) -> ChoiMatrix:
    """Dephase in the eigenbasis of rho, record the outcome, re-prepare through conj(U)."""
    return _channel(pp, np.eye(pp.d), AI, AO, "RA")


def bob_channel(pp: PerfectPair) -> ChoiMatrix:
    """As :func:`alice_channel`, preceded by the cyclic shift of the eigenbasis."""
    return _channel(pp, pp.shift, BI, BO, "RB")


def _transmit(pp: PerfectPair, x: np.ndarray) -> np.ndarray:
    """Action of the comb's wire from the first party's output to the second's input."""
    u = pp.unitary
    return u.T @ x @ u.conj()


def simulate_order(pp: PerfectPair, order: str) -> HermitianOperator:
    """Joint state of the two classical registers (Alice's first) when the
    comb runs in ``order`` and both parties apply their local channels."""
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}")
    d = pp.d
    first, second = (alice_channel(pp), bob_channel(pp)) if order == "AB" else (bob_channel(pp), alice_channel(pp))
    out1 = first.apply(pp.rho).reshape(d, d, d, d)  # (reg, out, reg', out')
    joint = np.zeros((d, d, d, d), dtype=complex)
    for r in range(d):
        for s in range(d):
            block = out1[r, :, s, :]
            if not np.any(block):
                continue
            out2 = second.apply(_transmit(pp, block)).reshape(d, d, d, d)
            # discard the second party's output system
            joint[r, :, s, :] += np.einsum("aobo->ab", out2)
    regs = joint.reshape(d * d, d * d)
    if order == "BA":
        # reorder to (Alice register, Bob register)
        regs = regs.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)
    labels = (SystemLabel("RA", d), SystemLabel("RB", d))
    return HermitianOperator(labels, regs)


def success_effect(d: int) -> np.ndarray:
    """``Q1 = sum_i |ii><ii|``: guess the second order when the registers agree."""
    q = np.zeros((d * d, d * d))
    for i in range(d):
        q[i * d + i, i * d + i] = 1.0
    return q


def perfect_probability(pp: PerfectPair) -> float:
    q1 = success_effect(pp.d)
    q0 = np.eye(pp.d ** 2) - q1
    s_ab = simulate_order(pp, "AB").data
    s_ba = simulate_order(pp, "BA").data
    return 0.5 * float(np.real(np.trace(s_ab @ q0) + np.trace(s_ba @ q1)))


def protocol_strategy(pp: PerfectPair):
    """The protocol as a discrimination strategy ``(S0, S1)`` on AI, AO, BI, BO
    under the ``tr(W S)`` convention (transposed instrument Chois)."""
    from .discrimination import Strategy

    d = pp.d
    ka = _local_kraus(pp, np.eye(d))
    kb = _local_kraus(pp, pp.shift)
    la = (SystemLabel(AO, d), SystemLabel(AI, d))
    lb = (SystemLabel(BO, d), SystemLabel(BI, d))
    s = [np.zeros((d ** 4, d ** 4), dtype=complex) for _ in range(2)]
    for i in range(d):
        ai = choi_of_channel(ka[i][i * d:(i + 1) * d, :], la[1:], la[:1])
        for j in range(d):
            bj = choi_of_channel(kb[j][j * d:(j + 1) * d, :], lb[1:], lb[:1])
            op = canonical(tensor(ai.op, bj.op))
            s[int(i == j)] += op.data.T
    labels = party_labels(d, d, d, d)
    return Strategy(HermitianOperator(labels, s[0]), HermitianOperator(labels, s[1]))
