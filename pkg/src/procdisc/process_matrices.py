"""Bipartite process matrices on AI (x) AO (x) BI (x) BO.

Covers the validity projector, both equivalent validity tests, the
constructors for the free / ordered classes, the party swap, the standard
causally non-separable example and its Pauli conjugation family.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from math import prod, sqrt

import numpy as np

from .errors import LabelError, ValidationError
from .quantum_networks import Check
from .tensor_core import (
    HermitianOperator,
    SystemLabel,
    embed,
    identity,
    labels_of,
    max_abs,
    min_eig,
    partial_trace,
    permute_systems,
    reduce_and_replace,
    relabel,
)

AI, AO, BI, BO = "AI", "AO", "BI", "BO"
PARTIES = (AI, AO, BI, BO)
DEFAULT_TOL = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ProcessClass(enum.Enum):
    FREE = "free"
    COMB_AB = "comb-ab"
    COMB_BA = "comb-ba"
    SEPARABLE = "sep"
    UNCLASSIFIED = "unclassified"


def party_labels(d_ai=2, d_ao=2, d_bi=2, d_bo=2) -> tuple[SystemLabel, ...]:
    return labels_of((AI, d_ai), (AO, d_ao), (BI, d_bi), (BO, d_bo))


def canonical(w: HermitianOperator) -> HermitianOperator:
    """Reorder to AI, AO, BI, BO."""
    if set(w.names) != set(PARTIES):
        raise LabelError(f"expected labels {PARTIES}, got {w.names}")
    return permute_systems(w, PARTIES)


def dims_of(w: HermitianOperator) -> dict[str, int]:
    return {n: w.dim_of(n) for n in PARTIES}


def _sub(w, names):
    return reduce_and_replace(w, names)


def project_LV(w: HermitianOperator) -> HermitianOperator:
    """Projector onto the linear span of valid process matrices."""
    w = canonical(w)
    terms = (
        (+1, [AO]), (+1, [BO]), (-1, [AO, BO]), (-1, [BI, BO]),
        (+1, [AO, BI, BO]), (-1, [AI, AO]), (+1, [AI, AO, BO]),
    )
    acc = np.zeros_like(w.data)
    for sign, over in terms:
        acc = acc + sign * _sub(w, over).data
    return HermitianOperator(w.labels, acc)


def _trace_target(w) -> float:
    return w.dim_of(AO) * w.dim_of(BO)


def validate_def1(w: HermitianOperator, tol: float = DEFAULT_TOL) -> Check:
    """PSD, fixed point of ``project_LV`` and trace ``dAO*dBO``."""
    w = canonical(w)
    res = {
        "psd": max(0.0, -min_eig(w)),
        "lv": max_abs(w.data - project_LV(w).data),
        "trace": abs(w.real_trace() - _trace_target(w)),
    }
    return Check(all(v <= tol for v in res.values()), res)


def validate_def2(w: HermitianOperator, tol: float = DEFAULT_TOL) -> Check:
    """Same set as :func:`validate_def1`, tested through the three marginal
    identities instead of the projector."""
    w = canonical(w)
    res = {
        "psd": max(0.0, -min_eig(w)),
        "a_marginal": max_abs(_sub(w, [AI, AO]).data - _sub(w, [AO, AI, BO]).data),
        "b_marginal": max_abs(_sub(w, [BI, BO]).data - _sub(w, [AO, BI, BO]).data),
        "outputs": max_abs(w.data - (_sub(w, [BO]).data + _sub(w, [AO]).data - _sub(w, [AO, BO]).data)),
        "trace": abs(w.real_trace() - _trace_target(w)),
    }
    return Check(all(v <= tol for v in res.values()), res)


@dataclass(frozen=True)
class ProcessMatrix:
    """A validated process matrix; construct through :meth:`from_operator`
    or the class constructors below."""
    op: HermitianOperator

    @classmethod
    def from_operator(cls, w: HermitianOperator, tol: float = DEFAULT_TOL) -> "ProcessMatrix":
        w = canonical(w)
        check = validate_def1(w, tol)
        if not check:
            raise ValidationError(f"not a process matrix: residuals {check.residuals}")
        return cls(w)

    @classmethod
    def from_array(cls, data, dims=(2, 2, 2, 2), tol: float = DEFAULT_TOL) -> "ProcessMatrix":
        return cls.from_operator(HermitianOperator(party_labels(*dims), data), tol)

    @property
    def data(self) -> np.ndarray:
        return self.op.data

    @property
    def labels(self):
        return self.op.labels

    @property
    def dims(self) -> dict[str, int]:
        return dims_of(self.op)


# -- class membership (closed form residuals) ---------------------------------

def free_residual(w: HermitianOperator) -> float:
    """Distance from ``W = rho_{AI BI} (x) 1_{AO BO}`` form."""
    w = canonical(w)
    return max_abs(w.data - _sub(w, [AO, BO]).data)


def comb_ab_residuals(w: HermitianOperator) -> dict[str, float]:
    """``W = W' (x) 1_BO`` and ``tr_BI W' = W'' (x) 1_AO``."""
    w = canonical(w)
    r1 = max_abs(w.data - _sub(w, [BO]).data)
    wp = partial_trace(w, [BO]) / w.dim_of(BO)
    red = partial_trace(wp, [BI])
    r2 = max_abs(red.data - _sub(red, [AO]).data)
    return {"bo_identity": r1, "bi_marginal": r2}


def comb_ba_residuals(w: HermitianOperator) -> dict[str, float]:
    return comb_ab_residuals(swap_parties_op(w))


def is_free(w, tol: float = 1e-8) -> bool:
    op = w.op if isinstance(w, ProcessMatrix) else w
    return validate_def1(op, tol).ok and free_residual(op) <= tol


def is_comb_ab(w, tol: float = 1e-8) -> bool:
    op = w.op if isinstance(w, ProcessMatrix) else w
    return validate_def1(op, tol).ok and max(comb_ab_residuals(op).values()) <= tol


def is_comb_ba(w, tol: float = 1e-8) -> bool:
    op = w.op if isinstance(w, ProcessMatrix) else w
    return validate_def1(op, tol).ok and max(comb_ba_residuals(op).values()) <= tol


# -- constructors --------------------------------------------------------------

def make_free(rho: HermitianOperator, d_ao: int = 2, d_bo: int = 2, tol: float = 1e-9) -> ProcessMatrix:
    """``rho_{AI BI} (x) 1_{AO BO}``; ``rho`` must carry labels AI and BI."""
    if set(rho.names) != {AI, BI}:
        raise LabelError(f"rho must be on AI, BI; got {rho.names}")
    if min_eig(rho) < -tol or abs(rho.real_trace() - 1) > tol:
        raise ValidationError("rho is not a state")
    full = party_labels(rho.dim_of(AI), d_ao, rho.dim_of(BI), d_bo)
    return ProcessMatrix.from_operator(embed(rho, full))


def make_comb_ab(wp: HermitianOperator, d_bo: int = 2, tol: float = 1e-8) -> ProcessMatrix:
    """``W' (x) 1_BO`` with ``W'`` on AI, AO, BI satisfying
    ``tr_BI W' = W'' (x) 1_AO`` and ``tr W' = dAO``."""
    if set(wp.names) != {AI, AO, BI}:
        raise LabelError(f"W' must be on AI, AO, BI; got {wp.names}")
    wp = permute_systems(wp, [AI, AO, BI])
    red = partial_trace(wp, [BI])
    marg = max_abs(red.data - _sub(red, [AO]).data)
    if marg > tol:
        raise ValidationError(f"tr_BI W' is not of the form W'' (x) 1_AO (residual {marg:.2e})")
    if min_eig(wp) < -tol:
        raise ValidationError("W' is not positive semidefinite")
    if abs(wp.real_trace() - wp.dim_of(AO)) > tol:
        raise ValidationError(f"tr W' = {wp.real_trace():.6g}, expected dim(AO) = {wp.dim_of(AO)}")
    full = party_labels(wp.dim_of(AI), wp.dim_of(AO), wp.dim_of(BI), d_bo)
    return ProcessMatrix.from_operator(embed(wp, full))


_SWAP = {AI: BI, AO: BO, BI: AI, BO: AO}


def swap_parties_op(w: HermitianOperator) -> HermitianOperator:
    w = canonical(w)
    return canonical(relabel(w, _SWAP))


def swap_parties(w: ProcessMatrix) -> ProcessMatrix:
    """Exchange Alice's and Bob's systems (AI <-> BI, AO <-> BO)."""
    op = w.op if isinstance(w, ProcessMatrix) else w
    if op.dim_of(AI) != op.dim_of(BI) or op.dim_of(AO) != op.dim_of(BO):
        raise LabelError("party swap needs dim(AI)=dim(BI) and dim(AO)=dim(BO)")
    return ProcessMatrix(swap_parties_op(op))


def make_comb_ba(wp: HermitianOperator, d_ao: int = 2, tol: float = 1e-8) -> ProcessMatrix:
    """``W' (x) 1_AO`` with ``W'`` on BI, BO, AI (the mirror of :func:`make_comb_ab`)."""
    mirrored = relabel(wp, _SWAP)
    return ProcessMatrix(swap_parties_op(make_comb_ab(mirrored, d_bo=d_ao, tol=tol).op))


def pauli_string(ops: str) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for c in ops:
        out = np.kron(out, PAULI[c])
    return out


def make_cns_example() -> ProcessMatrix:
    """The two-qubit-per-party causally non-separable process matrix
    ``1/4 [1 + (Z_AO Z_BI + Z_AI X_BI Z_BO)/sqrt(2)]``."""
    # factor order AI, AO, BI, BO
    t1 = pauli_string("IZZI")
    t2 = pauli_string("ZIXZ")
    data = 0.25 * (np.eye(16) + (t1 + t2) / sqrt(2))
    return ProcessMatrix.from_operator(HermitianOperator(party_labels(), data))


def pauli_twirl_family(w: ProcessMatrix) -> list[ProcessMatrix]:
    """All 256 conjugations of ``w`` by four-fold Pauli strings, identity first."""
    op = w.op if isinstance(w, ProcessMatrix) else w
    if any(op.dim_of(n) != 2 for n in PARTIES):
        raise LabelError("Pauli family needs all four systems to be qubits")
    out = []
    for s in itertools.product("IXYZ", repeat=4):
        p = pauli_string("".join(s))
        out.append(ProcessMatrix(HermitianOperator(op.labels, p @ op.data @ p.conj().T)))
    return out


def maximally_mixed(dims=(2, 2, 2, 2)) -> ProcessMatrix:
    """``1 / (dAI dBI)``, the interior point of every class."""
    labels = party_labels(*dims)
    return ProcessMatrix(identity(labels) / (dims[0] * dims[2]))


def random_process_matrix(rng: np.random.Generator, dims=(2, 2, 2, 2), spread: tuple[float, float] = (0.3, 1.0)) -> ProcessMatrix:
    """Random valid process matrix: the maximally mixed one moved along a
    projected random Hermitian direction, a random fraction of the way to the
    PSD boundary."""
    labels = party_labels(*dims)
    n = prod(dims)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = project_LV(HermitianOperator(labels, (g + g.conj().T) / 2))
    direction = h.data - np.trace(h.data).real / n * np.eye(n)
    base = np.eye(n) / (dims[0] * dims[2])
    lam = np.linalg.eigvalsh(direction)[0]
    smax = (1.0 / (dims[0] * dims[2])) / abs(lam)
    s = rng.uniform(*spread) * smax
    return ProcessMatrix.from_operator(HermitianOperator(labels, base + s * direction), tol=1e-8)


def random_comb_ab(rng: np.random.Generator, dims=(2, 2, 2, 2), rank: int | None = None) -> ProcessMatrix:
    """Random element of the A-before-B class: ``(sqrt(rho) (x) 1) C (sqrt(rho) (x) 1) (x) 1_BO``
    where ``C`` is the (input-first) Choi matrix of a random channel AI AO -> BI."""
    from .quantum_networks import random_isometry

    d_ai, d_ao, d_bi, d_bo = dims
    din = d_ai * d_ao
    r = rank or din * d_bi
    v = random_isometry(rng, d_bi * r, din)
    c = np.zeros((din * d_bi, din * d_bi), dtype=complex)
    for k in range(r):
        kk = v[k * d_bi:(k + 1) * d_bi, :]
        vec = kk.T.reshape(-1)  # input-first ordering: index (in, out)
        c += np.outer(vec, vec.conj())
    g = rng.standard_normal((d_ai, d_ai)) + 1j * rng.standard_normal((d_ai, d_ai))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    w_, v_ = np.linalg.eigh(rho)
    sq = (v_ * np.sqrt(np.clip(w_, 0, None))) @ v_.conj().T
    s = np.kron(sq, np.eye(d_ao * d_bi))
    wp = HermitianOperator(labels_of((AI, d_ai), (AO, d_ao), (BI, d_bi)), s @ c @ s)
    return make_comb_ab(wp, d_bo=d_bo)
