"""Dense primal-dual interior-point solver for Hermitian semidefinite programs.

Problem form (``sense="maximize"``)::

    primal:  maximize   sum_b tr(C_b X_b)
             subject to sum_b tr(A_ib X_b) = v_i,   X_b >= 0
    dual:    minimize   sum_i v_i y_i
             subject to sum_i y_i A_ib - C_b = Z_b >= 0

The iteration is infeasible-start Mehrotra predictor-corrector with
Nesterov-Todd scaling, run directly on complex Hermitian matrices.

Blocks may declare a tensor-product structure (``Block.dims``).  Rows whose
coefficient acts as the identity on some factors, ``A = H (x) 1_T``, are then
stored as the small ``H`` and the Schur complement is contracted factor-wise,
which is what keeps partial-trace constraints on 81 x 81 blocks affordable.
"""
from __future__ import annotations

import enum
import logging
import string
from dataclasses import dataclass, field
from math import prod
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import dpstrf

from .errors import SolverError

log = logging.getLogger(__name__)

# kernel contraction is used while (kept side)^2 x (kept side)^2 stays below this
_KERNEL_LIMIT = 1 << 22


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class Block:
    """A PSD variable of size ``side``; ``dims`` optionally splits it into
    tensor factors (their product must equal ``side``)."""
    name: str
    side: int
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        if self.dims and prod(self.dims) != self.side:
            raise ValueError(f"block {self.name!r}: dims {self.dims} do not multiply to {self.side}")

    @property
    def factors(self) -> tuple[int, ...]:
        return tuple(self.dims) if self.dims else (self.side,)


@dataclass(frozen=True)
class Constraint:
    """``sum_b tr(coeffs[b] X_b) = rhs``; blocks missing from ``coeffs`` have
    coefficient zero."""
    coeffs: Mapping[str, np.ndarray]
    rhs: float
    tag: str = ""


@dataclass(frozen=True)
class SdpProblem:
    blocks: tuple[Block, ...]
    objective: Mapping[str, np.ndarray]
    constraints: tuple[Constraint, ...]
    sense: str = "maximize"

    def __post_init__(self):
        if self.sense not in ("maximize", "minimize"):
            raise ValueError(f"unknown sense {self.sense!r}")
        sides = {b.name: b.side for b in self.blocks}
        if len(sides) != len(self.blocks):
            raise ValueError("duplicate block names")
        for src in [self.objective] + [c.coeffs for c in self.constraints]:
            for name, mat in src.items():
                if name not in sides:
                    raise ValueError(f"coefficient for unknown block {name!r}")
                mat = np.asarray(mat)
                if mat.shape != (sides[name], sides[name]):
                    raise ValueError(f"coefficient for block {name!r} has shape {mat.shape}")
                if np.max(np.abs(mat - mat.conj().T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(mat), initial=0.0)):
                    raise ValueError(f"non-Hermitian coefficient for block {name!r}")

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def dump(self, fh) -> None:
        """Write the problem as sparse text: a header, then for the objective
        (row ``0``) and each constraint (rows ``1..m``) one line per nonzero
        upper-triangle entry ``row block i j re im``.  Constraint right-hand
        sides follow as ``rhs row value`` lines."""
        fh.write(f"# sense {self.sense}\n")
        for b in self.blocks:
            fh.write(f"block {b.name} {b.side}\n")
        rows = [self.objective] + [c.coeffs for c in self.constraints]
        for r, coeffs in enumerate(rows):
            for name, mat in coeffs.items():
                mat = np.asarray(mat, dtype=complex)
                ii, jj = np.nonzero(np.triu(np.abs(mat) > 0))
                for i, j in zip(ii, jj):
                    fh.write(f"{r} {name} {i} {j} {float(mat[i, j].real)!r} {float(mat[i, j].imag)!r}\n")
        for r, c in enumerate(self.constraints, start=1):
            fh.write(f"rhs {r} {float(c.rhs)!r}\n")


@dataclass
class SdpSolution:
    status: Status
    primal_value: float
    dual_value: float
    blocks: dict[str, np.ndarray]
    dual_slacks: dict[str, np.ndarray]
    multipliers: np.ndarray
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: list[dict] = field(default_factory=list)
    dropped: tuple[int, ...] = ()

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def value(self) -> float:
        return 0.5 * (self.primal_value + self.dual_value)


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    gap_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    rank_tol: float = 1e-10
    divergence: float = 1e10


# -- real embedding --------------------------------------------------------------

def realify(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def complexify(x: np.ndarray) -> np.ndarray:
    n = x.shape[0] // 2
    re = 0.5 * (x[:n, :n] + x[n:, n:])
    im = 0.5 * (x[n:, :n] - x[:n, n:])
    out = re + 1j * im
    return 0.5 * (out + out.conj().T)


def real_embedding(problem: SdpProblem) -> SdpProblem:
    """Equivalent problem over real symmetric blocks of twice the side.

    ``X -> realify(X)`` doubles traces, so every coefficient is halved.
    Block values of the embedded solution map back through :func:`complexify`.
    """
    def conv(coeffs):
        return {k: 0.5 * realify(v) for k, v in coeffs.items()}
    blocks = tuple(Block(b.name, 2 * b.side) for b in problem.blocks)
    cons = tuple(Constraint(conv(c.coeffs), c.rhs, c.tag) for c in problem.constraints)
    return SdpProblem(blocks, conv(problem.objective), cons, problem.sense)


# -- tensor helpers ----------------------------------------------------------------

def _ptrace(a: np.ndarray, dims: Sequence[int], traced: Sequence[int]) -> np.ndarray:
    if not traced:
        return a
    k = len(dims)
    letters = string.ascii_letters
    rows = list(letters[:k])
    cols = [rows[s] if s in traced else letters[k + s] for s in range(k)]
    out = [rows[s] for s in range(k) if s not in traced] + [cols[s] for s in range(k) if s not in traced]
    side = prod(dims[s] for s in range(k) if s not in traced)
    t = np.einsum("".join(rows + cols) + "->" + "".join(out), a.reshape(tuple(dims) * 2))
    return t.reshape(side, side)


def _lift(h: np.ndarray, dims: Sequence[int], traced: Sequence[int]) -> np.ndarray:
    """``h (x) 1_traced`` with factors put back in their natural order."""
    if not traced:
        return h
    k = len(dims)
    kept = [s for s in range(k) if s not in traced]
    order = kept + list(traced)
    dt = prod(dims[s] for s in traced)
    full = np.kron(h, np.eye(dt)).reshape(tuple(dims[s] for s in order) * 2)
    inv = [int(p) for p in np.argsort(order)]
    n = prod(dims)
    return full.transpose(inv + [k + p for p in inv]).reshape(n, n)


def _identity_factors(a: np.ndarray, dims: Sequence[int], tol: float) -> tuple[int, ...]:
    """Factors on which ``a`` acts as the identity."""
    k = len(dims)
    if k < 2:
        return ()
    scale = tol * (1.0 + np.max(np.abs(a), initial=0.0))
    t = a.reshape(tuple(dims) * 2)
    out = []
    for s in range(k):
        u = np.moveaxis(t, (s, k + s), (-2, -1))
        d = dims[s]
        diag = np.einsum("...ii->...i", u)
        off = u - np.einsum("...i,ij->...ij", diag, np.eye(d))
        if (np.max(np.abs(off), initial=0.0) <= scale
                and np.max(np.abs(diag - diag[..., :1]), initial=0.0) <= scale):
            out.append(s)
    return tuple(out)


@dataclass
class _Group:
    """Rows of one block sharing ``A_i = H_i (x) 1_traced``."""
    rows: np.ndarray
    traced: tuple[int, ...]
    H: np.ndarray  # (len(rows), kept side, kept side)

    @property
    def kept_side(self) -> int:
        return self.H.shape[1]

    def flat(self) -> np.ndarray:
        return self.H.reshape(len(self.rows), -1)


def _kernel(w: np.ndarray, dims, t1, t2) -> np.ndarray:
    """``K`` with ``tr((H1 (x) 1) W (H2 (x) 1) W) = vec(H1) K vec(H2)``."""
    k = len(dims)
    pool = iter(string.ascii_letters)
    x = [next(pool) for _ in range(k)]
    y = [x[s] if s in t1 else next(pool) for s in range(k)]
    z = [next(pool) for _ in range(k)]
    u = [z[s] if s in t2 else next(pool) for s in range(k)]
    k1 = [s for s in range(k) if s not in t1]
    k2 = [s for s in range(k) if s not in t2]
    out = [x[s] for s in k1] + [y[s] for s in k1] + [z[s] for s in k2] + [u[s] for s in k2]
    wt = w.reshape(tuple(dims) * 2)
    expr = "".join(y + z) + "," + "".join(u + x) + "->" + "".join(out)
    kern = np.einsum(expr, wt, wt, optimize="greedy")
    n1 = prod(dims[s] for s in k1)
    n2 = prod(dims[s] for s in k2)
    return kern.reshape(n1 * n1, n2 * n2)


def _schur_pair(w: np.ndarray, dims, g1: _Group, g2: _Group) -> np.ndarray:
    """``Re tr(A_i W A_j W)`` for rows ``i`` of ``g1`` and ``j`` of ``g2``."""
    if g1.kept_side ** 2 * g2.kept_side ** 2 <= _KERNEL_LIMIT:
        kern = _kernel(w, dims, g1.traced, g2.traced)
        return np.real(g1.flat() @ kern @ g2.flat().T)
    swap = len(g1.rows) > len(g2.rows)
    small, big = (g2, g1) if swap else (g1, g2)
    out = np.empty((len(small.rows), len(big.rows)))
    bf = big.flat()
    for i, h in enumerate(small.H):
        y = w @ _lift(h, dims, small.traced) @ w
        r = _ptrace(y, dims, big.traced)
        out[i] = np.real(bf @ r.conj().ravel())
    return out.T if swap else out


# -- problem preprocessing ------------------------------------------------------------

class _Prepared:
    """Row-reduced data with per-block factored rows."""

    def __init__(self, problem: SdpProblem, opts: SolverOptions):
        self.blocks = problem.blocks
        self.sides = [b.side for b in problem.blocks]
        self.dims = [b.factors for b in problem.blocks]
        self.sign = 1.0 if problem.sense == "maximize" else -1.0
        self.C = [self.sign * np.asarray(problem.objective.get(b.name, np.zeros((b.side, b.side))), dtype=complex)
                  for b in problem.blocks]
        groups_all = self._factor(problem)
        self.m = problem.n_constraints
        self.groups = groups_all
        self.keep, self.drop, self.consistent = self._independent(problem, opts.rank_tol)
        self.m = len(self.keep)
        self.b = np.array([problem.constraints[i].rhs for i in self.keep], dtype=float)
        pos = {r: k for k, r in enumerate(self.keep)}
        self.groups = []
        for blk_groups in groups_all:
            new = []
            for g in blk_groups:
                sel = [k for k, r in enumerate(g.rows) if int(r) in pos]
                if sel:
                    new.append(_Group(np.array([pos[int(g.rows[k])] for k in sel]), g.traced, g.H[sel]))
            self.groups.append(new)

    def _factor(self, problem):
        per_block = []
        seen: dict[tuple, tuple] = {}
        for b, dims in zip(problem.blocks, self.dims):
            buckets: dict[tuple, list] = {}
            for i, c in enumerate(problem.constraints):
                a = c.coeffs.get(b.name)
                if a is None:
                    continue
                key = (id(a), dims)
                if key not in seen:
                    arr = np.asarray(a, dtype=complex)
                    if not np.any(arr):
                        seen[key] = (None, None)
                    else:
                        t = _identity_factors(arr, dims, 1e-12)
                        seen[key] = (t, _ptrace(arr, dims, t) / prod(dims[s] for s in t))
                t, h = seen[key]
                if t is not None:
                    buckets.setdefault(t, []).append((i, h))
            per_block.append([_Group(np.array([i for i, _ in v]), t, np.array([h for _, h in v]))
                              for t, v in buckets.items()])
        return per_block

    # linear maps ------------------------------------------------------------------
    def op_A(self, X) -> np.ndarray:
        out = np.zeros(self.m)
        for groups, dims, x in zip(self.groups, self.dims, X):
            for g in groups:
                r = _ptrace(x, dims, g.traced)
                out[g.rows] += np.real(g.flat() @ r.conj().ravel())
        return out

    def op_At(self, y) -> list[np.ndarray]:
        res = []
        for groups, dims, n in zip(self.groups, self.dims, self.sides):
            acc = np.zeros((n, n), dtype=complex)
            for g in groups:
                h = np.tensordot(y[g.rows], g.H, axes=1)
                acc += _lift(h, dims, g.traced)
            res.append(acc)
        return res

    def row_norms(self) -> list[np.ndarray]:
        out = []
        for groups, dims in zip(self.groups, self.dims):
            nrm = np.zeros(self.m)
            for g in groups:
                mult = prod(dims[s] for s in g.traced)
                nrm[g.rows] = np.sqrt(mult) * np.linalg.norm(g.flat(), axis=1)
            out.append(nrm)
        return out

    def schur(self, W) -> np.ndarray:
        M = np.zeros((self.m, self.m))
        for groups, dims, w in zip(self.groups, self.dims, W):
            for a in range(len(groups)):
                for c in range(a, len(groups)):
                    g1, g2 = groups[a], groups[c]
                    blk = _schur_pair(w, dims, g1, g2)
                    M[np.ix_(g1.rows, g2.rows)] += blk
                    if a != c:
                        M[np.ix_(g2.rows, g1.rows)] += blk.T
        return 0.5 * (M + M.T)

    def _independent(self, problem, rank_tol):
        """Pivoted Cholesky of the row Gram matrix picks a maximal
        independent subset; dropped rows must have consistent right-hand sides."""
        m = problem.n_constraints
        if m == 0:
            return [], [], True
        gram = self.schur([np.eye(n) for n in self.sides])
        rhs = np.array([c.rhs for c in problem.constraints], dtype=float)
        norms = np.sqrt(np.clip(np.diag(gram), 0.0, None))
        zero = norms <= 1e-300
        if np.any(zero & (np.abs(rhs) > 0)):
            return [], list(range(m)), False
        live = np.flatnonzero(~zero)
        scaled = gram[np.ix_(live, live)] / np.outer(norms[live], norms[live])
        _, piv, rank, _ = dpstrf(scaled, lower=1, tol=max(rank_tol, 64 * np.finfo(float).eps))
        piv = live[np.asarray(piv[:len(live)]) - 1]
        keep = sorted(int(i) for i in piv[:rank])
        drop = sorted(set(range(m)) - set(keep))
        consistent = True
        if drop:
            coef = np.linalg.lstsq(gram[np.ix_(keep, keep)], gram[np.ix_(keep, drop)], rcond=None)[0]
            pred = coef.T @ rhs[keep]
            consistent = bool(np.all(np.abs(pred - rhs[drop]) <= 1e-8 * (1 + np.abs(rhs[drop]))))
        return keep, drop, consistent


def independent_rows(problem: SdpProblem, rank_tol: float = 1e-10):
    """Indices of a maximal independent subset of the constraints, the
    indices dropped, and whether the dropped right-hand sides are implied."""
    prep = _Prepared(problem, SolverOptions(rank_tol=rank_tol))
    return prep.keep, prep.drop, prep.consistent


# -- the solver ----------------------------------------------------------------

def _herm(a):
    return 0.5 * (a + a.conj().T)


def _inner(U, V) -> float:
    return float(sum(np.vdot(u, v).real for u, v in zip(U, V)))


def _max_step(x_chol: np.ndarray, dx: np.ndarray) -> float:
    """Largest t with X + t dX >= 0 given the Cholesky factor of X."""
    li = sla.solve_triangular(x_chol, np.eye(x_chol.shape[0]), lower=True)
    lam = np.linalg.eigvalsh(_herm(li @ dx @ li.conj().T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _chol(a):
    return np.linalg.cholesky(_herm(a))


def solve(problem: SdpProblem, opts: SolverOptions | None = None, **kwargs) -> SdpSolution:
    """Solve ``problem``; never raises on non-convergence, the status says so.

    Keyword arguments override fields of :class:`SolverOptions`.
    """
    opts = opts or SolverOptions()
    if kwargs:
        opts = SolverOptions(**{**opts.__dict__, **kwargs})
    rp = _Prepared(problem, opts)
    if not rp.consistent:
        return _failed(problem, Status.INFEASIBLE, 0, rp.drop)
    n_total = sum(rp.sides)

    # identity-multiple starting point scaled by the data
    norms = rp.row_norms()
    X, Z = [], []
    for k, n in enumerate(rp.sides):
        an = norms[k]
        ratio = np.max((1 + np.abs(rp.b)) / (1 + an)) if rp.m else 1.0
        X.append(max(10.0, np.sqrt(n), n * ratio) * np.eye(n, dtype=complex))
        cn = np.linalg.norm(rp.C[k])
        Z.append(max(10.0, np.sqrt(n), cn, np.max(an) if rp.m else 0.0) * np.eye(n, dtype=complex))
    y = np.zeros(rp.m)

    history = []
    bn = 1.0 + np.linalg.norm(rp.b)
    cn = 1.0 + np.sqrt(sum(np.linalg.norm(c) ** 2 for c in rp.C))
    status = Status.NUMERICAL_FAILURE
    it = 0
    for it in range(opts.max_iter + 1):
        r_p = rp.b - rp.op_A(X)
        At_y = rp.op_At(y)
        R_d = [c - aty + z for c, aty, z in zip(rp.C, At_y, Z)]
        pobj = _inner(rp.C, X)
        dobj = float(rp.b @ y)
        mu = _inner(X, Z) / n_total
        pres = float(np.max(np.abs(r_p), initial=0.0))
        dres = max(float(np.max(np.abs(r), initial=0.0)) for r in R_d)
        history.append(dict(iter=it, pobj=rp.sign * pobj, dobj=rp.sign * dobj, mu=mu,
                            pres=pres, dres=dres))
        log.debug("it %3d pobj %.10e dobj %.10e mu %.2e pres %.2e dres %.2e",
                  it, pobj, dobj, mu, pres, dres)
        gap = abs(dobj - pobj)
        if (pres <= opts.feas_tol * bn and dres <= opts.feas_tol * cn
                and gap <= opts.gap_tol and mu * n_total <= opts.gap_tol):
            status = Status.OPTIMAL
            break
        cert = _certificates(rp, X, y, opts)
        if cert is not None:
            status = cert
            break
        if it == opts.max_iter:
            break
        try:
            X, y, Z = _nt_step(rp, X, y, Z, r_p, R_d, mu, opts)
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            log.debug("step failed: %s", exc)
            break

    blocks = {b.name: _herm(x) for b, x in zip(problem.blocks, X)}
    slacks = {b.name: _herm(z) for b, z in zip(problem.blocks, Z)}
    mult = np.zeros(problem.n_constraints)
    mult[rp.keep] = y
    if problem.sense == "minimize":
        mult = -mult
    # residuals reported against the original (unreduced) data
    pres_full, dres_full = _full_residuals(problem, blocks, slacks, mult)
    pval = _objective(problem, blocks)
    dval = float(sum(c.rhs * mi for c, mi in zip(problem.constraints, mult)))
    if status is Status.OPTIMAL and (pres_full > 10 * opts.feas_tol * bn or dres_full > 10 * opts.feas_tol * cn):
        status = Status.NUMERICAL_FAILURE
    return SdpSolution(status=status, primal_value=pval, dual_value=dval,
                       blocks=blocks, dual_slacks=slacks, multipliers=mult,
                       gap=abs(dval - pval), primal_residual=pres_full,
                       dual_residual=dres_full, iterations=it, history=history,
                       dropped=tuple(rp.drop))


def _objective(problem, blocks):
    return float(sum(np.vdot(np.asarray(c, dtype=complex), blocks[name]).real
                     for name, c in problem.objective.items()))


def _full_residuals(problem, blocks, slacks, mult):
    pres = 0.0
    for c in problem.constraints:
        val = sum(np.vdot(np.asarray(a, dtype=complex), blocks[name]).real for name, a in c.coeffs.items())
        pres = max(pres, abs(val - c.rhs))
    sign = 1.0 if problem.sense == "maximize" else -1.0
    dres = 0.0
    for b in problem.blocks:
        acc = np.zeros((b.side, b.side), dtype=complex)
        for c, mi in zip(problem.constraints, mult):
            if b.name in c.coeffs:
                acc += mi * np.asarray(c.coeffs[b.name])
        cb = np.asarray(problem.objective.get(b.name, np.zeros((b.side, b.side))), dtype=complex)
        # maximize: sum y A - C = Z ; minimize: C - sum y A = Z
        resid = sign * (acc - cb) - slacks[b.name]
        dres = max(dres, float(np.max(np.abs(resid), initial=0.0)))
    return pres, dres


def _failed(problem, status, it, drop):
    blocks = {b.name: np.zeros((b.side, b.side), dtype=complex) for b in problem.blocks}
    return SdpSolution(status=status, primal_value=np.nan, dual_value=np.nan, blocks=blocks,
                       dual_slacks=dict(blocks), multipliers=np.zeros(problem.n_constraints),
                       gap=np.inf, primal_residual=np.inf, dual_residual=np.inf,
                       iterations=it, dropped=tuple(drop))


def _certificates(rp: _Prepared, X, y, opts) -> Status | None:
    """Farkas-type certificates read off diverging iterates."""
    ynorm = np.linalg.norm(y)
    if ynorm > opts.divergence:
        yh = y / ynorm
        lam = min(np.linalg.eigvalsh(_herm(a))[0] for a in rp.op_At(yh))
        if rp.b @ yh < -1e-8 and lam > -1e-6:
            return Status.INFEASIBLE
    xnorm = sum(np.trace(x).real for x in X)
    if xnorm > opts.divergence:
        Xh = [x / xnorm for x in X]
        if np.max(np.abs(rp.op_A(Xh)), initial=0.0) < 1e-6 and _inner(rp.C, Xh) > 1e-8:
            return Status.UNBOUNDED
    if ynorm > opts.divergence or xnorm > opts.divergence:
        return Status.NUMERICAL_FAILURE
    return None


def _nt_step(rp: _Prepared, X, y, Z, r_p, R_d, mu, opts):
    Lx = [_chol(x) for x in X]
    Lz = [_chol(z) for z in Z]
    G, Ginv, D, W = [], [], [], []
    for lx, lz in zip(Lx, Lz):
        _, s, vh = np.linalg.svd(lz.conj().T @ lx)
        g = lx @ vh.conj().T / np.sqrt(s)
        G.append(g)
        D.append(s)
        W.append(g @ g.conj().T)
        Ginv.append((np.sqrt(s)[:, None] * vh) @ sla.solve_triangular(lx, np.eye(lx.shape[0]), lower=True))

    M = rp.schur(W)
    try:
        cf = sla.cho_factor(M, lower=True)
        solve_M = lambda r: sla.cho_solve(cf, r)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(M)
        cut = 1e-14 * max(w[-1], 1e-300)
        inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
        solve_M = lambda r: v @ (inv * (v.T @ r))

    def direction(T):
        base = [g @ t @ g.conj().T + w @ rd @ w for g, t, w, rd in zip(G, T, W, R_d)]
        rhs = rp.op_A(base) - r_p
        dy = solve_M(rhs)
        dy = dy + solve_M(rhs - M @ dy)  # one refinement step
        aty = rp.op_At(dy)
        dZ = [_herm(a - rd) for a, rd in zip(aty, R_d)]
        dX = [_herm(b - w @ a @ w) for b, w, a in zip(base, W, aty)]
        return dX, dy, dZ

    def steps(dX, dZ):
        ap = min([1.0] + [_max_step(lx, dx) for lx, dx in zip(Lx, dX)])
        ad = min([1.0] + [_max_step(lz, dz) for lz, dz in zip(Lz, dZ)])
        return ap, ad

    # predictor
    dXa, _, dZa = direction([-np.diag(d).astype(complex) for d in D])
    ap, ad = steps(dXa, dZa)
    n_total = sum(rp.sides)
    mu_aff = _inner([x + ap * dx for x, dx in zip(X, dXa)], [z + ad * dz for z, dz in zip(Z, dZa)]) / n_total
    sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

    # corrector
    T = []
    for g, gi, d, dx, dz in zip(G, Ginv, D, dXa, dZa):
        dxt = gi @ dx @ gi.conj().T
        dzt = g.conj().T @ dz @ g
        R = sigma * mu * np.eye(d.size) - np.diag(d * d) - _herm(dxt @ dzt)
        T.append(2.0 * R / (d[:, None] + d[None, :]))
    dX, dy, dZ = direction(T)
    ap, ad = steps(dX, dZ)
    ap = min(1.0, opts.step_fraction * ap)
    ad = min(1.0, opts.step_fraction * ad)
    Xn = [_herm(x + ap * dx) for x, dx in zip(X, dX)]
    Zn = [_herm(z + ad * dz) for z, dz in zip(Z, dZ)]
    return Xn, y + ad * dy, Zn


def solve_or_raise(problem: SdpProblem, opts: SolverOptions | None = None, **kwargs) -> SdpSolution:
    sol = solve(problem, opts, **kwargs)
    if not sol.optimal:
        raise SolverError(f"SDP finished with status {sol.status.value} "
                          f"(gap {sol.gap:.2e}, residuals {sol.primal_residual:.2e}/{sol.dual_residual:.2e})",
                          sol)
    return sol
