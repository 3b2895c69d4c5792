"""Choi-matrix calculus: channels, instruments, non-signalling channels,
combs and testers.

Choi convention: ``M = sum_ij Phi(|i><j|) (x) |i><j|`` with the output
systems first, so ``tr_out M = 1_in`` for a trace-preserving map.  For a
Kraus operator ``K`` this is ``|K>><<K|`` with ``|K>> = sum_i K|i> (x) |i>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Callable, Sequence

import numpy as np

from .errors import LabelError, ValidationError
from .tensor_core import (
    HermitianOperator,
    LabelledOperator,
    SystemLabel,
    embed,
    max_abs,
    min_eig,
    partial_trace,
    partial_transpose,
    permute_systems,
    reduce_and_replace,
    vectorize,
)

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class ChoiMatrix:
    op: HermitianOperator
    in_labels: tuple[str, ...]
    out_labels: tuple[str, ...]

    def __post_init__(self):
        names = set(self.op.names)
        parts = set(self.in_labels) | set(self.out_labels)
        if set(self.in_labels) & set(self.out_labels) or parts != names:
            raise LabelError(f"in/out labels {self.in_labels}/{self.out_labels} "
                             f"do not partition {self.op.names}")

    @property
    def in_dims(self):
        return tuple(self.op.dim_of(n) for n in self.in_labels)

    @property
    def out_dims(self):
        return tuple(self.op.dim_of(n) for n in self.out_labels)

    def label(self, name: str) -> SystemLabel:
        return self.op.labels[self.op.names.index(name)]

    def tp_residual(self) -> float:
        """max |tr_out M - 1_in|."""
        red = partial_trace(self.op, self.out_labels)
        if not self.in_labels:
            return abs(red.trace() - 1.0)
        return max_abs(red.data - np.eye(red.side))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action of the map on a matrix given in the ``in_labels`` order."""
        op = permute_systems(self.op, self.out_labels + self.in_labels)
        din = prod(self.in_dims)
        dout = prod(self.out_dims)
        t = op.data.reshape(dout, din, dout, din)
        # Phi(rho) = tr_in[(1 (x) rho^T) M]
        return np.einsum("aibj,ij->ab", t, np.asarray(rho))


@dataclass(frozen=True)
class Instrument:
    elements: tuple[ChoiMatrix, ...]

    def total(self) -> ChoiMatrix:
        first = self.elements[0]
        data = sum(e.op.data for e in self.elements)
        return ChoiMatrix(HermitianOperator(first.op.labels, data), first.in_labels, first.out_labels)


@dataclass(frozen=True)
class Comb:
    """Deterministic network; ``teeth`` is ``[(in_0, out_1), (in_2, out_3), ...]``
    with ``None`` standing for a trivial (dimension one) system."""
    op: HermitianOperator
    teeth: tuple[tuple[str | None, str | None], ...]


@dataclass(frozen=True)
class Tester:
    elements: tuple[HermitianOperator, ...]
    comb: Comb


@dataclass
class Check:
    """Outcome of a structural check with per-condition residuals."""
    ok: bool
    residuals: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def choi_of_channel(kraus, in_labels: Sequence[SystemLabel], out_labels: Sequence[SystemLabel]) -> ChoiMatrix:
    """Choi matrix of ``rho -> sum_k K rho K^dagger``.

    ``kraus`` is a single matrix (unitary / isometry) or a sequence of Kraus
    operators of shape ``(prod out dims, prod in dims)``.
    """
    in_labels, out_labels = tuple(in_labels), tuple(out_labels)
    ks = [np.asarray(kraus, dtype=complex)] if np.ndim(kraus) == 2 else [np.asarray(k, dtype=complex) for k in kraus]
    din = prod(l.dim for l in in_labels)
    dout = prod(l.dim for l in out_labels)
    for k in ks:
        if k.shape != (dout, din):
            raise ValidationError(f"Kraus operator of shape {k.shape}, expected {(dout, din)}")
    data = np.zeros((dout * din, dout * din), dtype=complex)
    for k in ks:
        v = vectorize(k)
        data += np.outer(v, v.conj())
    op = HermitianOperator(out_labels + in_labels, data)
    return ChoiMatrix(op, tuple(l.name for l in in_labels), tuple(l.name for l in out_labels))


def choi_of_map(fn: Callable[[np.ndarray], np.ndarray], in_labels, out_labels) -> ChoiMatrix:
    """Choi matrix of an arbitrary linear map given as a function on matrices."""
    in_labels, out_labels = tuple(in_labels), tuple(out_labels)
    din = prod(l.dim for l in in_labels)
    dout = prod(l.dim for l in out_labels)
    data = np.zeros((dout * din, dout * din), dtype=complex)
    for i in range(din):
        for j in range(din):
            e = np.zeros((din, din))
            e[i, j] = 1.0
            data += np.kron(np.asarray(fn(e), dtype=complex), e)
    op = HermitianOperator(out_labels + in_labels, data)
    return ChoiMatrix(op, tuple(l.name for l in in_labels), tuple(l.name for l in out_labels))


def state_as_choi(rho: HermitianOperator) -> ChoiMatrix:
    """A state is the Choi matrix of a preparation (no input systems)."""
    return ChoiMatrix(rho, (), rho.names)


def link_operators(n: LabelledOperator, m: LabelledOperator) -> LabelledOperator:
    """``N * M = tr_Z[(N (x) 1)(M^{T_Z} (x) 1)]`` over the shared labels Z.

    Result labels: N's private labels followed by M's private labels.
    """
    shared = [l for l in n.labels if l.name in m.names]
    for l in shared:
        if m.dim_of(l.name) != l.dim:
            raise LabelError(f"shared label {l.name!r} has dims {l.dim} and {m.dim_of(l.name)}")
    shared_names = [l.name for l in shared]
    n_only = [l for l in n.labels if l.name not in shared_names]
    m_only = [l for l in m.labels if l.name not in shared_names]
    full = tuple(n_only) + tuple(shared) + tuple(m_only)
    mt = partial_transpose(m, shared_names) if shared_names else m
    prod_op = embed(n, full).data @ embed(mt, full).data
    out = partial_trace(LabelledOperator(full, prod_op), shared_names)
    data = out.data
    if isinstance(n, HermitianOperator) and isinstance(m, HermitianOperator):
        # product of commuting-after-trace factors: Hermitian up to rounding
        return HermitianOperator(out.labels, data, tol=1e-6)
    return out


def link_product(n: ChoiMatrix, m: ChoiMatrix) -> ChoiMatrix:
    """Link product of two Choi matrices; returns output-first ordering.

    When every system is contracted the result is a 1x1 operator (a number).
    """
    op = link_operators(n.op, m.op)
    names = set(op.names)
    outs = tuple(x for x in n.out_labels + m.out_labels if x in names)
    ins = tuple(x for x in n.in_labels + m.in_labels if x in names)
    if op.labels:
        op = permute_systems(op, outs + ins)
    return ChoiMatrix(op, ins, outs)


def _psd_residual(op: HermitianOperator) -> float:
    return max(0.0, -min_eig(op)) if op.side else 0.0


def is_nonsignalling(n, tol: float = DEFAULT_TOL, party_a=("AI", "AO"), party_b=("BI", "BO")) -> Check:
    """Check that ``n`` on {AI, AO, BI, BO} is the Choi matrix of a
    non-signalling channel AI (x) BI -> AO (x) BO.

    Residuals: ``psd`` (negative part of the spectrum), ``tp``
    (``tr_{AO BO} N - 1``), ``marginal_a`` (``tr_AO N`` vs ``1_AI/dAI (x) tr_{AI AO} N``)
    and ``marginal_b`` likewise.
    """
    op = n.op if isinstance(n, ChoiMatrix) else n
    (ai, ao), (bi, bo) = party_a, party_b
    if set(op.names) != {ai, ao, bi, bo}:
        raise LabelError(f"expected labels {{{ai},{ao},{bi},{bo}}}, got {op.names}")
    res = {"psd": _psd_residual(op)}
    red = partial_trace(op, [ao, bo])
    res["tp"] = max_abs(red.data - np.eye(red.side))
    ta = partial_trace(op, [ao])
    res["marginal_a"] = max_abs(ta.data - reduce_and_replace(ta, [ai]).data)
    tb = partial_trace(op, [bo])
    res["marginal_b"] = max_abs(tb.data - reduce_and_replace(tb, [bi]).data)
    return Check(all(v <= tol for v in res.values()), res)


def is_comb(c: HermitianOperator, teeth, tol: float = DEFAULT_TOL) -> Check:
    """Check positivity and the recursive normalization
    ``tr_{out_k} R^(k) = 1_{in_k} (x) R^(k-1)`` down to ``R^(0) = 1``."""
    teeth = [tuple(t) for t in teeth]
    named = [x for t in teeth for x in t if x is not None]
    if sorted(named) != sorted(c.names) or len(set(named)) != len(named):
        raise LabelError(f"teeth {teeth} do not match labels {c.names}")
    res = {"psd": _psd_residual(c)}
    r = c
    for k in range(len(teeth), 0, -1):
        tin, tout = teeth[k - 1]
        reduced = partial_trace(r, [tout]) if tout is not None else r
        below = partial_trace(reduced, [tin]) if tin is not None else reduced
        din = r.dim_of(tin) if tin is not None else 1
        below = below / din
        expect = embed(below, reduced.labels)
        res[f"level_{k}"] = max_abs(reduced.data - expect.data)
        r = below
    res["normalization"] = abs(r.trace() - 1.0)
    return Check(all(v <= tol for v in res.values()), res)


def validate_instrument(inst: Instrument, tol: float = DEFAULT_TOL) -> Check:
    if not inst.elements:
        raise ValidationError("instrument has no elements")
    res = {f"psd_{i}": _psd_residual(e.op) for i, e in enumerate(inst.elements)}
    res["tp"] = inst.total().tp_residual()
    return Check(all(v <= tol for v in res.values()), res)


def validate_tester(t: Tester, tol: float = DEFAULT_TOL) -> Check:
    res = {f"psd_{i}": _psd_residual(e) for i, e in enumerate(t.elements)}
    total = sum(e.data for e in t.elements)
    res["sum"] = max_abs(total - t.comb.op.data)
    comb = is_comb(t.comb.op, t.comb.teeth, tol)
    res.update({f"comb_{k}": v for k, v in comb.residuals.items()})
    first, last = t.comb.teeth[0][0], t.comb.teeth[-1][1]
    trivial = (first is None or t.comb.op.dim_of(first) == 1) and (last is None or t.comb.op.dim_of(last) == 1)
    return Check(trivial and all(v <= tol for v in res.values()), res)


# -- random objects (seeded) ---------------------------------------------------

def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-random isometry C^cols -> C^rows via QR of a complex Gaussian."""
    z = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return random_isometry(rng, d, d)


def random_channel(rng: np.random.Generator, in_labels, out_labels, n_kraus: int | None = None) -> ChoiMatrix:
    """Random channel from a Stinespring isometry with ``n_kraus`` environment levels."""
    in_labels, out_labels = tuple(in_labels), tuple(out_labels)
    din = prod(l.dim for l in in_labels)
    dout = prod(l.dim for l in out_labels)
    r = n_kraus or din * dout
    v = random_isometry(rng, dout * r, din)
    kraus = [v[k * dout:(k + 1) * dout, :] for k in range(r)]
    return choi_of_channel(kraus, in_labels, out_labels)


def random_state(rng: np.random.Generator, labels, rank: int | None = None) -> HermitianOperator:
    labels = tuple(labels)
    d = prod(l.dim for l in labels)
    r = rank or d
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    return HermitianOperator(labels, rho / np.trace(rho).real)
