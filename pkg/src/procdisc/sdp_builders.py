"""Turn linear maps on labelled Hermitian operators into SDP constraint rows.

A linear equation ``L(X) = R`` with ``L: Herm(in) -> Herm(out)`` is expanded
in the orthonormal Hermitian basis and reduced by an SVD to ``rank(L)``
orthonormal rows, so every builder emits exactly as many rows as the real
dimension of the constrained space.
"""
from __future__ import annotations

from math import prod
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .sdp_engine import Constraint
from .tensor_core import (
    HermitianOperator,
    SystemLabel,
    from_hermitian_coords,
    iter_hermitian_basis,
    hermitian_coords,
    embed,
    identity,
    reduce_and_replace,
)

RANK_TOL = 1e-10


def map_matrix(fn: Callable[[HermitianOperator], HermitianOperator], in_labels: Sequence[SystemLabel]):
    """Real matrix of ``fn`` in Hermitian coordinates, plus the output labels."""
    in_labels = tuple(in_labels)
    n = prod(l.dim for l in in_labels)
    cols = []
    out_labels = None
    for e in iter_hermitian_basis(n):
        img = fn(HermitianOperator(in_labels, e))
        out_labels = img.labels
        cols.append(hermitian_coords(img.data))
    return np.array(cols).T, out_labels


def rows_from_map(fn, in_labels, blocks: Sequence[str], rhs: HermitianOperator | None = None,
                  tag: str = "", rank_tol: float = RANK_TOL, traced: Sequence[str] = ()) -> list[Constraint]:
    """Rows for ``fn(tr_traced sum_b X_b) = rhs`` (``rhs`` defaults to zero).

    ``fn`` only ever sees the reduced systems, so a leading partial trace
    costs nothing; each row is ``h (x) 1_traced``, normalized.
    """
    in_labels = tuple(in_labels)
    reduced = tuple(l for l in in_labels if l.name not in traced)
    scale = np.sqrt(prod(l.dim for l in in_labels if l.name in traced))
    mat, _ = map_matrix(fn, reduced)
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    r = int(np.sum(s > rank_tol * max(s[0], 1e-300))) if s.size else 0
    target = np.zeros(mat.shape[0]) if rhs is None else hermitian_coords(rhs.data)
    if rhs is not None:
        outside = target - u[:, :r] @ (u[:, :r].T @ target)
        if np.max(np.abs(outside), initial=0.0) > 1e-9 * (1 + np.max(np.abs(target))):
            raise ValueError("right-hand side is outside the range of the map: no solution")
    vals = (u[:, :r].T @ target) / s[:r] / scale
    rows = []
    for j in range(r):
        h = HermitianOperator(reduced, from_hermitian_coords(vt[j]))
        coeff = embed(h, in_labels).data / scale if traced else h.data
        rows.append(Constraint({b: coeff for b in blocks}, float(vals[j]), f"{tag}[{j}]"))
    return rows


def trace_row(labels, blocks: Sequence[str], value: float, tag: str = "trace") -> Constraint:
    n = prod(l.dim for l in labels)
    eye = np.eye(n, dtype=complex)
    return Constraint({b: eye for b in blocks}, float(value), tag)


def marginal_rows(labels, traced: str, replaced: str, blocks: Sequence[str], tag: str = "") -> list[Constraint]:
    """Rows for ``tr_T X = 1_R / dim(R) (x) tr_{T R} X``."""
    def fn(red):
        return red - reduce_and_replace(red, [replaced])
    return rows_from_map(fn, labels, blocks, tag=tag or f"marg[{traced}|{replaced}]", traced=(traced,))


def nonsignalling_rows(labels, blocks: Sequence[str]) -> list[Constraint]:
    """Both marginal conditions of a bipartite non-signalling Choi matrix
    on AI, AO, BI, BO (trace normalization not included)."""
    return (marginal_rows(labels, "AO", "AI", blocks, tag="ns_a")
            + marginal_rows(labels, "BO", "BI", blocks, tag="ns_b"))


def comb_ab_rows(labels, blocks: Sequence[str]) -> list[Constraint]:
    """Rows whose kernel is ``{W' on AI,AO,BI : tr_BI W' = W'' (x) 1_AO}``."""
    return marginal_rows(labels, "BI", "AO", blocks, tag="comb_ab")


def tester_rows(labels, blocks: Sequence[str]) -> list[Constraint]:
    """Normalization of a two-step tester on AI, AO, BI, BO:
    ``tr_BO L = J (x) 1_BI`` with ``tr_AO J = 1_AI``."""
    rows = marginal_rows(labels, "BO", "BI", blocks, tag="tester_b")
    names = [l.name for l in labels]
    ai = [l for l in labels if l.name == "AI"]
    d_bi = labels[names.index("BI")].dim

    rows += rows_from_map(lambda x: x, labels, blocks, rhs=identity(ai) * float(d_bi),
                          tag="tester_a", traced=("AO", "BI", "BO"))
    return rows


def coefficient_matrix(rows: Sequence[Constraint], block: str, n: int) -> np.ndarray:
    """Rows as a real matrix in Hermitian coordinates of ``block``."""
    return np.array([hermitian_coords(r.coeffs[block]) for r in rows]).reshape(len(rows), n * n)


def kernel_basis(rows: Sequence[Constraint], block: str, n: int) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of the common kernel of ``rows`` on ``block``."""
    if rows:
        ns = sla.null_space(coefficient_matrix(rows, block, n), rcond=RANK_TOL)
    else:
        ns = np.eye(n * n)
    return [from_hermitian_coords(ns[:, k]) for k in range(ns.shape[1])]
