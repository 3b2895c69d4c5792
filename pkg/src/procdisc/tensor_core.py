"""Dense linear algebra on labelled tensor-product spaces.

Every operator carries an ordered tuple of :class:`SystemLabel`; the label
order is the storage order of the Kronecker factors.  Partial traces,
partial transposes and permutations are addressed by label *name*.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, LabelError, NotHermitianError

HERMITIAN_TOL = 1e-8
PSD_CLAMP = -1e-10


@dataclass(frozen=True)
class SystemLabel:
    name: str
    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise LabelError(f"dimension of {self.name!r} must be >= 1, got {self.dim}")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


class LabelledOperator:
    """A square complex matrix acting on an ordered tensor product of systems."""

    __slots__ = ("labels", "data")

    def __init__(self, labels: Sequence[SystemLabel], data):
        labels = tuple(labels)
        names = [l.name for l in labels]
        if len(set(names)) != len(names):
            raise LabelError(f"duplicate label names in {names}")
        data = np.asarray(data, dtype=complex)
        side = prod(l.dim for l in labels)
        if data.shape != (side, side):
            raise LabelError(f"matrix shape {data.shape} does not match labels {names} (side {side})")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", _freeze(data))

    def __setattr__(self, key, value):
        raise AttributeError("labelled operators are immutable")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(l.name for l in self.labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(l.dim for l in self.labels)

    @property
    def side(self) -> int:
        return self.data.shape[0]

    def dim_of(self, name: str) -> int:
        for l in self.labels:
            if l.name == name:
                return l.dim
        raise LabelError(f"unknown label {name!r}; have {self.names}")

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def with_data(self, data) -> "LabelledOperator":
        return type(self)(self.labels, data)

    def __repr__(self):
        spec = ",".join(f"{l.name}:{l.dim}" for l in self.labels)
        return f"{type(self).__name__}([{spec}])"

    # arithmetic keeps the label list; the caller is responsible for matching labels
    def _check_same(self, other):
        if self.labels != other.labels:
            raise LabelError(f"label mismatch {self.names} vs {other.names}")

    def __add__(self, other):
        self._check_same(other)
        return _promote(self, other)(self.labels, self.data + other.data)

    def __sub__(self, other):
        self._check_same(other)
        return _promote(self, other)(self.labels, self.data - other.data)

    def __neg__(self):
        return type(self)(self.labels, -self.data)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            return type(self)(self.labels, self.data * scalar)
        if isinstance(scalar, (complex, np.complexfloating)):
            return LabelledOperator(self.labels, self.data * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)


class HermitianOperator(LabelledOperator):
    """Labelled operator whose matrix is Hermitian.

    The matrix is symmetrized on construction; inputs farther than ``tol``
    (relative to their Frobenius norm, absolute below norm 1) from Hermitian
    are rejected.
    """

    __slots__ = ()

    def __init__(self, labels, data, tol: float = HERMITIAN_TOL):
        data = np.asarray(data, dtype=complex)
        if data.ndim == 2 and data.shape[0] == data.shape[1]:
            dev = np.max(np.abs(data - data.conj().T)) if data.size else 0.0
            scale = max(1.0, float(np.max(np.abs(data))) if data.size else 1.0)
            if dev > tol * scale:
                raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e}")
            data = 0.5 * (data + data.conj().T)
        super().__init__(labels, data)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.data)

    def real_trace(self) -> float:
        return float(np.trace(self.data).real)


def _promote(a, b):
    if isinstance(a, HermitianOperator) and isinstance(b, HermitianOperator):
        return HermitianOperator
    return LabelledOperator


def _like(x: LabelledOperator, labels, data):
    """Rebuild with the same Hermiticity class as ``x`` (operations used here
    all preserve Hermiticity)."""
    return type(x)(labels, data)


def labels_of(*pairs) -> tuple[SystemLabel, ...]:
    """``labels_of(("A", 2), ("B", 3))`` -> tuple of SystemLabel."""
    return tuple(SystemLabel(n, int(d)) for n, d in pairs)


def identity(labels: Sequence[SystemLabel]) -> HermitianOperator:
    labels = tuple(labels)
    return HermitianOperator(labels, np.eye(prod(l.dim for l in labels)))


def _indices(x: LabelledOperator, names: Iterable[str]) -> list[int]:
    names = list(names)
    idx = []
    for n in names:
        try:
            idx.append(x.names.index(n))
        except ValueError:
            raise LabelError(f"unknown label {n!r}; have {x.names}") from None
    if len(set(idx)) != len(idx):
        raise LabelError(f"repeated label in {names}")
    return idx


def _as_tensor(x: LabelledOperator) -> np.ndarray:
    dims = x.dims
    return x.data.reshape(dims + dims)


def tensor(a: LabelledOperator, b: LabelledOperator) -> LabelledOperator:
    """Kronecker product; labels are concatenated."""
    overlap = set(a.names) & set(b.names)
    if overlap:
        raise LabelError(f"duplicate label(s) {sorted(overlap)}")
    cls = _promote(a, b)
    return cls(a.labels + b.labels, np.kron(a.data, b.data))


def tensor_all(*ops: LabelledOperator) -> LabelledOperator:
    out = ops[0]
    for op in ops[1:]:
        out = tensor(out, op)
    return out


def partial_trace(x: LabelledOperator, over: Iterable[str]) -> LabelledOperator:
    over = list(over)
    idx = _indices(x, over)
    if not idx:
        return x
    k = len(x.labels)
    keep = [i for i in range(k) if i not in idx]
    t = _as_tensor(x)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * k > len(letters):
        raise LabelError("too many subsystems for einsum")
    row = list(letters[:k])
    col = list(letters[k:2 * k])
    for i in idx:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    labels = tuple(x.labels[i] for i in keep)
    side = prod(l.dim for l in labels)
    return _like(x, labels, res.reshape(side, side))


def partial_transpose(x: LabelledOperator, over: Iterable[str]) -> LabelledOperator:
    idx = _indices(x, over)
    k = len(x.labels)
    t = _as_tensor(x)
    axes = list(range(2 * k))
    for i in idx:
        axes[i], axes[k + i] = axes[k + i], axes[i]
    return _like(x, x.labels, t.transpose(axes).reshape(x.side, x.side))


def permute_systems(x: LabelledOperator, new_order: Sequence[str]) -> LabelledOperator:
    new_order = list(new_order)
    if sorted(new_order) != sorted(x.names) or len(new_order) != len(x.names):
        raise LabelError(f"{new_order} is not a permutation of {list(x.names)}")
    perm = _indices(x, new_order)
    if perm == list(range(len(perm))):
        return x
    k = len(perm)
    t = _as_tensor(x).transpose(perm + [k + p for p in perm])
    return _like(x, tuple(x.labels[p] for p in perm), t.reshape(x.side, x.side))


def relabel(x: LabelledOperator, mapping: dict) -> LabelledOperator:
    """Rename labels without touching the data."""
    labels = tuple(SystemLabel(mapping.get(l.name, l.name), l.dim) for l in x.labels)
    return _like(x, labels, x.data)


def embed(x: LabelledOperator, full: Sequence[SystemLabel]) -> LabelledOperator:
    """``x`` tensored with identities on the labels of ``full`` it lacks, in
    the order of ``full``.  Identity factors are unnormalized."""
    full = tuple(full)
    by_name = {l.name: l for l in full}
    for l in x.labels:
        if l.name not in by_name:
            raise LabelError(f"label {l.name!r} not in target {[f.name for f in full]}")
        if by_name[l.name].dim != l.dim:
            raise LabelError(f"label {l.name!r} has dim {l.dim}, target says {by_name[l.name].dim}")
    missing = tuple(l for l in full if l.name not in x.names)
    out = x
    if missing:
        out = tensor(x, identity(missing))
    return permute_systems(out, [l.name for l in full])


def reduce_and_replace(x: LabelledOperator, over: Iterable[str]) -> LabelledOperator:
    """Trace out ``over`` and put back the normalized identity there:
    ``1_X / dim(X) (x) tr_X(x)``, labels kept in their original order."""
    over = list(over)
    if not over:
        return x
    d = prod(x.dim_of(n) for n in over)
    return embed(partial_trace(x, over), x.labels) / d


# -- spectral routines ---------------------------------------------------------

def _fix_phases(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > max(tol, 1e-8 * np.max(np.abs(col))))
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            vecs[:, j] = col / ph
    return vecs


def hermitian_eig(x: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and unitary eigenvectors (columns).

    Each eigenvector's first non-negligible component is made real positive,
    so the decomposition is deterministic for a given input.
    """
    data = x.data if isinstance(x, LabelledOperator) else np.asarray(x, dtype=complex)
    try:
        w, v = np.linalg.eigh(data)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise DomainError(f"eigendecomposition failed: {exc}") from exc
    return w, _fix_phases(v)


def trace_norm(x: HermitianOperator) -> float:
    if not isinstance(x, HermitianOperator):
        raise NotHermitianError("trace_norm is defined here for HermitianOperator only")
    return float(np.sum(np.abs(np.linalg.eigvalsh(x.data))))


def _psd_eig(x: HermitianOperator, clamp: float):
    w, v = np.linalg.eigh(x.data)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[0] < clamp * scale:
        raise DomainError(f"operator is not PSD: min eigenvalue {w[0]:.3e}")
    return np.clip(w, 0.0, None), v


def sqrt_psd(x: HermitianOperator, clamp: float = PSD_CLAMP) -> HermitianOperator:
    w, v = _psd_eig(x, clamp)
    return HermitianOperator(x.labels, (v * np.sqrt(w)) @ v.conj().T)


def pseudo_inverse_sqrt(x: HermitianOperator, clamp: float = PSD_CLAMP,
                        rank_tol: float = 1e-12) -> tuple[HermitianOperator, HermitianOperator]:
    """Return ``(sqrt(x)^+, projector onto im(x))`` for PSD ``x``.

    Eigenvalues below ``rank_tol * max_eig`` are treated as zero.
    """
    w, v = _psd_eig(x, clamp)
    cut = rank_tol * max(float(w.max()) if w.size else 0.0, 1e-300)
    support = w > cut
    inv = np.zeros_like(w)
    inv[support] = 1.0 / np.sqrt(w[support])
    vs = v[:, support]
    return (HermitianOperator(x.labels, (v * inv) @ v.conj().T),
            HermitianOperator(x.labels, vs @ vs.conj().T))


def vectorize(x) -> np.ndarray:
    """``|X>> = sum_i (X|i>) (x) |i>``; for a matrix this is row-major flattening."""
    data = x.data if isinstance(x, LabelledOperator) else np.asarray(x)
    return np.asarray(data, dtype=complex).reshape(-1).copy()


def unvectorize(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    return np.asarray(v).reshape(rows, rows if cols is None else cols)


def hs_inner(a: LabelledOperator, b: LabelledOperator) -> complex:
    """Hilbert-Schmidt inner product tr(a^dagger b); labels must agree."""
    a._check_same(b)
    return complex(np.vdot(a.data, b.data))


def max_abs(x) -> float:
    data = x.data if isinstance(x, LabelledOperator) else np.asarray(x)
    return float(np.max(np.abs(data))) if data.size else 0.0


def min_eig(x: HermitianOperator) -> float:
    return float(np.linalg.eigvalsh(x.data)[0])


# -- Hermitian coordinates -----------------------------------------------------

def _pairs(n: int):
    return np.triu_indices(n, 1)


def iter_hermitian_basis(n: int):
    """Elements of :func:`hermitian_basis` one at a time."""
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        yield e
    for i, j in zip(*_pairs(n)):
        e = np.zeros((n, n), dtype=complex)
        e[i, j] = e[j, i] = s
        yield e
        e = np.zeros((n, n), dtype=complex)
        e[i, j] = -1j * s
        e[j, i] = 1j * s
        yield e


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of n x n Hermitian matrices,
    shape ``(n*n, n, n)``: diagonal units, then symmetric and antisymmetric
    off-diagonal pairs."""
    return np.array(list(iter_hermitian_basis(n))).reshape(n * n, n, n)


def hermitian_coords(a: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
    """Real coordinates of Hermitian ``a`` in :func:`hermitian_basis` (or in
    an explicitly supplied orthonormal basis)."""
    a = np.asarray(a)
    if basis is not None:
        return np.einsum("kij,ij->k", basis.conj(), a).real
    n = a.shape[0]
    iu, ju = _pairs(n)
    off = a[iu, ju]
    out = np.empty(n * n)
    out[:n] = np.diagonal(a).real
    out[n::2] = np.sqrt(2.0) * off.real
    out[n + 1::2] = -np.sqrt(2.0) * off.imag
    return out


def from_hermitian_coords(c: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if basis is not None:
        return np.einsum("k,kij->ij", c, basis)
    n = int(round(np.sqrt(c.size)))
    iu, ju = _pairs(n)
    out = np.zeros((n, n), dtype=complex)
    out[np.diag_indices(n)] = c[:n]
    upper = (c[n::2] - 1j * c[n + 1::2]) / np.sqrt(2.0)
    out[iu, ju] = upper
    out[ju, iu] = upper.conj()
    return out
