"""Single-shot discrimination of process matrices and distances to the
causal classes.

All programs are assembled from constraint rows of :mod:`procdisc.sdp_builders`
and solved with :mod:`procdisc.sdp_engine`.  Probabilities use ``tr(W S)``
without transposition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import prod
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import sdp_builders as sb
from .errors import LabelError, SolverError, ValidationError
from .process_matrices import (
    AI, AO, BI, BO,
    ProcessClass,
    ProcessMatrix,
    canonical,
    comb_ab_residuals,
    comb_ba_residuals,
    free_residual,
    validate_def1,
)
from .quantum_networks import is_nonsignalling
from .sdp_engine import (
    Block,
    Constraint,
    SdpProblem,
    SdpSolution,
    SolverOptions,
    solve,
)
from .tensor_core import (
    HermitianOperator,
    LabelledOperator,
    SystemLabel,
    embed,
    from_hermitian_coords,
    hermitian_coords,
    hermitian_eig,
    identity,
    max_abs,
    min_eig,
    partial_trace,
    pseudo_inverse_sqrt,
    sqrt_psd,
    trace_norm,
)

STRATEGY_TOL = 1e-7


def _op(w) -> HermitianOperator:
    return canonical(w.op if isinstance(w, ProcessMatrix) else w)


def _labels(w) -> tuple[SystemLabel, ...]:
    return _op(w).labels


def _dims(labels) -> dict[str, int]:
    return {l.name: l.dim for l in labels}


@dataclass(frozen=True)
class Strategy:
    s0: HermitianOperator
    s1: HermitianOperator

    @property
    def total(self) -> HermitianOperator:
        return self.s0 + self.s1

    def residuals(self) -> dict[str, float]:
        res = dict(is_nonsignalling(self.total, tol=np.inf).residuals)
        res["psd_s0"] = max(0.0, -min_eig(self.s0))
        res["psd_s1"] = max(0.0, -min_eig(self.s1))
        return res

    def is_feasible(self, tol: float = STRATEGY_TOL) -> bool:
        return all(v <= tol for v in self.residuals().values())

    def success_probability(self, w0, w1) -> float:
        return 0.5 * float(np.vdot(self.s0.data, _op(w0).data).real + np.vdot(self.s1.data, _op(w1).data).real)


@dataclass(frozen=True)
class DualCertificate:
    """Dual variables of the discrimination program: the scalar ``alpha``
    and the two non-signalling correction terms (``1_AO (x) Y0 - ...`` and
    ``1_BO (x) Y1 - ...`` as full operators)."""
    alpha: float
    ns_a: HermitianOperator
    ns_b: HermitianOperator

    def bound_operator(self) -> HermitianOperator:
        return identity(self.ns_a.labels) * self.alpha + self.ns_a + self.ns_b

    def violation(self, c0: HermitianOperator, c1: HermitianOperator) -> float:
        """Largest negative eigenvalue of ``M - c0`` and ``M - c1``."""
        m = self.bound_operator()
        return max(0.0, -min_eig(m - c0), -min_eig(m - c1))


@dataclass
class DiscriminationResult:
    p_succ: float
    strategy: Strategy
    certificate: DualCertificate
    gap: float
    primal_value: float
    dual_value: float
    residual: float
    solution: SdpSolution = field(repr=False)


@lru_cache(maxsize=16)
def _cached_ns_rows(labels, blocks) -> tuple[Constraint, ...]:
    rows = sb.nonsignalling_rows(labels, blocks)
    d = _dims(labels)
    rows.append(sb.trace_row(labels, blocks, d[AI] * d[BI]))
    for r in rows:
        for a in r.coeffs.values():
            a.flags.writeable = False
    return tuple(rows)


def _ns_block_rows(labels, blocks) -> list[Constraint]:
    """Non-signalling rows on ``S0 + S1`` plus the trace normalization."""
    return list(_cached_ns_rows(tuple(labels), tuple(blocks)))


def _clean_psd(a: np.ndarray, floor: float = -1e-7) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    if w[0] < floor * max(1.0, abs(w[-1])):
        raise ValidationError(f"solver block has eigenvalue {w[0]:.2e}")
    return (v * np.clip(w, 0, None)) @ v.conj().T


def _certificate(sol: SdpSolution, rows: Sequence[Constraint], labels, block: str) -> DualCertificate:
    n = prod(l.dim for l in labels)
    acc = {"ns_a": np.zeros((n, n), complex), "ns_b": np.zeros((n, n), complex)}
    alpha = 0.0
    for r, y in zip(rows, sol.multipliers):
        if r.tag.startswith("ns_a"):
            acc["ns_a"] += y * r.coeffs[block]
        elif r.tag.startswith("ns_b"):
            acc["ns_b"] += y * r.coeffs[block]
        elif r.tag == "trace":
            alpha = float(y)
    return DualCertificate(alpha, HermitianOperator(labels, acc["ns_a"]), HermitianOperator(labels, acc["ns_b"]))


def extract_strategy(solution: SdpSolution, labels, names=("S0", "S1")) -> Strategy:
    """Strategy held in the primal blocks of an optimal discrimination solve.

    Eigenvalues down to ``-1e-7`` are clipped to zero; anything more negative
    is reported as an error.
    """
    if not solution.optimal:
        raise SolverError(f"cannot extract a strategy from a {solution.status.value} solution", solution)
    s0 = HermitianOperator(labels, _clean_psd(solution.blocks[names[0]]))
    s1 = HermitianOperator(labels, _clean_psd(solution.blocks[names[1]]))
    return Strategy(s0, s1)


def _two_block_program(c0, c1, labels, rows) -> SdpProblem:
    n = prod(l.dim for l in labels)
    dims = tuple(l.dim for l in labels)
    return SdpProblem(
        blocks=(Block("S0", n, dims), Block("S1", n, dims)),
        objective={"S0": c0, "S1": c1},
        constraints=tuple(rows),
        sense="maximize",
    )


def _check_pair(w0, w1, validate: bool):
    a, b = _op(w0), _op(w1)
    if a.labels != b.labels:
        raise LabelError(f"dimension mismatch: {a.labels} vs {b.labels}")
    if validate:
        for name, w in (("w0", a), ("w1", b)):
            chk = validate_def1(w, 1e-7)
            if not chk:
                raise ValidationError(f"{name} is not a process matrix: {chk.residuals}")
    return a, b


def _solve_checked(problem, opts):
    sol = solve(problem, opts)
    if not sol.optimal:
        raise SolverError(f"discrimination SDP ended with status {sol.status.value}", sol)
    return sol


def p_succ(w0, w1, opts: SolverOptions | None = None, validate: bool = True) -> DiscriminationResult:
    """Optimal single-shot success probability for telling ``w0`` from ``w1``
    with equal priors, over all non-signalling instruments."""
    a, b = _check_pair(w0, w1, validate)
    labels = a.labels
    rows = _ns_block_rows(labels, ("S0", "S1"))
    sol = _solve_checked(_two_block_program(0.5 * a.data, 0.5 * b.data, labels, rows), opts)
    strat = extract_strategy(sol, labels)
    cert = _certificate(sol, rows, labels, "S0")
    return DiscriminationResult(
        p_succ=sol.value, strategy=strat, certificate=cert, gap=sol.gap,
        primal_value=sol.primal_value, dual_value=sol.dual_value,
        residual=max(sol.primal_residual, sol.dual_residual), solution=sol,
    )


def p_succ_free(rho: HermitianOperator, sigma: HermitianOperator, tol: float = 1e-9) -> float:
    """Closed form for free process matrices: ``1/2 + ||rho - sigma||_1 / 4``."""
    for name, s in (("rho", rho), ("sigma", sigma)):
        if min_eig(s) < -tol or abs(s.real_trace() - 1) > tol:
            raise ValidationError(f"{name} is not a state")
    return 0.5 + 0.25 * trace_norm(rho - sigma)


def base_norm_sdp(x: HermitianOperator, opts: SolverOptions | None = None) -> DiscriminationResult:
    """``max_N ||sqrt(N) x sqrt(N)||_1`` over non-signalling ``N``, solved as
    ``max tr(x S0) - tr(x S1)`` with ``S0 + S1`` non-signalling."""
    x = canonical(x)
    labels = x.labels
    rows = _ns_block_rows(labels, ("S0", "S1"))
    sol = _solve_checked(_two_block_program(x.data, -x.data, labels, rows), opts)
    return DiscriminationResult(
        p_succ=sol.value, strategy=extract_strategy(sol, labels),
        certificate=_certificate(sol, rows, labels, "S0"), gap=sol.gap,
        primal_value=sol.primal_value, dual_value=sol.dual_value,
        residual=max(sol.primal_residual, sol.dual_residual), solution=sol,
    )


def base_norm(x: HermitianOperator, opts: SolverOptions | None = None) -> float:
    if max_abs(x) == 0.0:
        return 0.0
    return base_norm_sdp(x, opts).p_succ


# -- adaptive (tester) strategies ---------------------------------------------

@dataclass
class AdaptiveResult:
    p_adapt: float
    l0: HermitianOperator
    l1: HermitianOperator
    gap: float
    residual: float
    solution: SdpSolution = field(repr=False)

    def first_step(self) -> HermitianOperator:
        """``J`` with ``tr_BO(L0 + L1) = J (x) 1_BI``."""
        total = self.l0 + self.l1
        return partial_trace(total, [BI, BO]) / total.dim_of(BI)


def solve_adaptive(w0, w1, opts: SolverOptions | None = None, tol: float = 1e-7) -> AdaptiveResult:
    """Best two-step tester for a pair of A-before-B process matrices."""
    a, b = _check_pair(w0, w1, validate=True)
    for name, w in (("w0", a), ("w1", b)):
        res = comb_ab_residuals(w)
        if max(res.values()) > tol:
            raise ValidationError(f"{name} is not an A-before-B comb: {res}")
    labels = a.labels
    rows = sb.tester_rows(labels, ("S0", "S1"))
    sol = _solve_checked(_two_block_program(0.5 * a.data, 0.5 * b.data, labels, rows), opts)
    strat = extract_strategy(sol, labels)
    return AdaptiveResult(sol.value, strat.s0, strat.s1, sol.gap,
                          max(sol.primal_residual, sol.dual_residual), sol)


def p_adapt(w0, w1, opts: SolverOptions | None = None) -> float:
    return solve_adaptive(w0, w1, opts).p_adapt


# -- distances to classes -----------------------------------------------------

@dataclass(frozen=True)
class _Param:
    """A PSD parameter block ``P`` entering the class member as ``embed(P)``."""
    block: str
    labels: tuple[SystemLabel, ...]
    base: np.ndarray
    rows: tuple[Constraint, ...]


def _class_params(cls: ProcessClass, labels) -> list[_Param]:
    d = _dims(labels)
    lab = {l.name: l for l in labels}

    def param(block, names, weight=1.0, rows_fn=None):
        sub = tuple(lab[n] for n in names)
        n = prod(l.dim for l in sub)
        missing = prod(l.dim for l in labels if l.name not in names)
        # embeds to ``weight`` times the maximally mixed process matrix
        base = weight * d[AO] * d[BO] / (n * missing) * np.eye(n)
        rows = tuple(rows_fn(sub, (block,))) if rows_fn else ()
        return _Param(block, sub, base, rows)

    if cls is ProcessClass.FREE:
        return [param("rho", (AI, BI))]
    if cls is ProcessClass.COMB_AB:
        return [param("wab", (AI, AO, BI), rows_fn=sb.comb_ab_rows)]
    if cls is ProcessClass.COMB_BA:
        return [param("wba", (AI, BI, BO), rows_fn=_comb_ba_rows)]
    if cls is ProcessClass.SEPARABLE:
        return [param("wab", (AI, AO, BI), 0.5, sb.comb_ab_rows),
                param("wba", (AI, BI, BO), 0.5, _comb_ba_rows)]
    raise ValueError(f"no distance program for class {cls}")


def _comb_ba_rows(labels, blocks):
    return sb.marginal_rows(labels, AI, BO, blocks, tag="comb_ba")


def _param_directions(params: Sequence[_Param], full) -> list[list[np.ndarray]]:
    """Joint basis of directions keeping every class constraint and the total
    trace fixed; each direction is one Hermitian matrix per parameter block."""
    sizes = [prod(l.dim for l in p.labels) for p in params]
    offs = np.cumsum([0] + [n * n for n in sizes])
    blocks_rows = []
    for p, n, off in zip(params, sizes, offs):
        if p.rows:
            mat = sb.coefficient_matrix(p.rows, p.block, n)
            pad = np.zeros((mat.shape[0], offs[-1]))
            pad[:, off:off + n * n] = mat
            blocks_rows.append(pad)
    trace_row = np.zeros(offs[-1])
    full_side = prod(l.dim for l in full)
    for p, n, off in zip(params, sizes, offs):
        # tr(embed(E)) = tr(E) * (product of the missing dimensions)
        trace_row[off:off + n * n] = (full_side // n) * hermitian_coords(np.eye(n))
    blocks_rows.append(trace_row[None, :])
    ns = sla.null_space(np.vstack(blocks_rows), rcond=1e-10)
    out = []
    for k in range(ns.shape[1]):
        parts = []
        for n, off in zip(sizes, offs):
            parts.append(from_hermitian_coords(ns[off:off + n * n, k]))
        out.append(parts)
    return out


def _embed_param(p: _Param, mat: np.ndarray, full) -> np.ndarray:
    return embed(HermitianOperator(p.labels, mat), full).data


@dataclass
class DistanceResult:
    distance: float
    closest: ProcessMatrix
    certificate: DualCertificate
    strategy: Strategy
    gap: float
    residual: float
    components: dict
    cross_check: float | None
    solution: SdpSolution = field(repr=False)

    @property
    def witness(self) -> DualCertificate:
        return self.certificate


def _class_of(cls) -> ProcessClass:
    if isinstance(cls, ProcessClass):
        return cls
    aliases = {"free": ProcessClass.FREE, "comb-ab": ProcessClass.COMB_AB, "comb_ab": ProcessClass.COMB_AB,
               "comb-ba": ProcessClass.COMB_BA, "comb_ba": ProcessClass.COMB_BA,
               "sep": ProcessClass.SEPARABLE, "separable": ProcessClass.SEPARABLE}
    try:
        return aliases[str(cls).lower()]
    except KeyError:
        raise ValueError(f"unknown class {cls!r}") from None


def distance_problem(w, cls) -> tuple[SdpProblem, list, list[_Param], list]:
    """Assemble the joint program whose dual minimizes the discrimination
    bound between ``w`` and a free member ``W*`` of ``cls``."""
    cls = _class_of(cls)
    a = _op(w)
    full = a.labels
    n = prod(l.dim for l in full)
    params = _class_params(cls, full)
    dirs = _param_directions(params, full)
    base_full = sum(_embed_param(p, p.base, full) for p in params)

    rows = _ns_block_rows(full, ("S0", "S1"))
    for k, parts in enumerate(dirs):
        coeffs = {"S1": -0.5 * sum(_embed_param(p, m, full) for p, m in zip(params, parts))}
        for p, m in zip(params, parts):
            coeffs[p.block] = m
        rows.append(Constraint(coeffs, 0.0, f"dir[{k}]"))
    dims = tuple(l.dim for l in full)
    blocks = [Block("S0", n, dims), Block("S1", n, dims)]
    blocks += [Block(p.block, p.base.shape[0], tuple(l.dim for l in p.labels)) for p in params]
    objective = {"S0": 0.5 * a.data, "S1": 0.5 * base_full}
    for p in params:
        objective[p.block] = -p.base
    problem = SdpProblem(tuple(blocks), objective, tuple(rows), "maximize")
    return problem, rows, params, dirs


def distance_to_class(w, cls, opts: SolverOptions | None = None, cross_check: bool = True) -> DistanceResult:
    """Base-norm distance from ``w`` to the closest member of ``cls``
    (free, A-before-B, B-before-A or causally separable).

    The returned ``closest`` member is rebuilt from the dual multipliers, so
    it satisfies the linear class constraints exactly.  With
    ``cross_check`` the discrimination program is re-solved between ``w``
    and ``closest`` and its ``4 p - 2`` is stored for comparison.
    """
    cls = _class_of(cls)
    a = _op(w)
    if not validate_def1(a, 1e-7):
        raise ValidationError("input is not a process matrix")
    full = a.labels
    problem, rows, params, dirs = distance_problem(a, cls)
    sol = _solve_checked(problem, opts)
    y = sol.multipliers
    k0 = len(rows) - len(dirs)
    comps = {}
    total = np.zeros_like(a.data)
    for i, p in enumerate(params):
        m = p.base + sum(y[k0 + k] * parts[i] for k, parts in enumerate(dirs))
        m = _clean_psd(0.5 * (m + m.conj().T))
        emb = _embed_param(p, m, full)
        comps[p.block] = HermitianOperator(p.labels, m)
        total = total + emb
    closest = ProcessMatrix(HermitianOperator(full, total))
    if cls is ProcessClass.SEPARABLE:
        d = _dims(full)
        comps["weight_ab"] = comps["wab"].real_trace() * d[BO] / (d[AO] * d[BO])
    dist = 4.0 * sol.value - 2.0
    check = None
    if cross_check:
        check = 4.0 * p_succ(a, closest, opts, validate=False).p_succ - 2.0
    return DistanceResult(
        distance=dist, closest=closest, certificate=_certificate(sol, rows, full, "S0"),
        strategy=extract_strategy(sol, full), gap=4.0 * sol.gap,
        residual=max(sol.primal_residual, sol.dual_residual), components=comps,
        cross_check=check, solution=sol,
    )


def is_separable(w, tol: float = 1e-6, opts: SolverOptions | None = None) -> bool:
    return distance_to_class(w, ProcessClass.SEPARABLE, opts, cross_check=False).distance <= tol


def classify(w, tol: float = 1e-8, sep_tol: float = 1e-6, opts: SolverOptions | None = None) -> ProcessClass:
    """Most specific class of a valid process matrix."""
    a = _op(w)
    if free_residual(a) <= tol:
        return ProcessClass.FREE
    if max(comb_ab_residuals(a).values()) <= tol:
        return ProcessClass.COMB_AB
    if max(comb_ba_residuals(a).values()) <= tol:
        return ProcessClass.COMB_BA
    if is_separable(a, sep_tol, opts):
        return ProcessClass.SEPARABLE
    return ProcessClass.UNCLASSIFIED


# -- realization of a strategy -------------------------------------------------

ANCILLA_NAMES = ("X1", "X2", "X3", "X4")


@dataclass(frozen=True)
class Realization:
    """Channel ``Phi_K`` into the outputs plus an ancilla copy of the four
    systems, followed by the binary measurement ``{Q0, Q1}`` on the ancilla."""
    k: HermitianOperator
    q0: HermitianOperator
    q1: HermitianOperator
    n: HermitianOperator

    @property
    def ancilla(self) -> tuple[str, ...]:
        return ANCILLA_NAMES

    def effective_strategy(self) -> Strategy:
        """``S_i = tr_X[(Q_i^T (x) 1) K]``, which equals ``sqrt(N) Q_i sqrt(N)``."""
        out = []
        for q in (self.q0, self.q1):
            lifted = embed(HermitianOperator(q.labels, q.data.T), self.k.labels)
            prod_op = lifted.data @ self.k.data
            red = partial_trace(LabelledOperator(self.k.labels, prod_op), ANCILLA_NAMES)
            out.append(HermitianOperator(red.labels, red.data, tol=1e-6))
        return Strategy(*out)

    def probability(self, w0, w1) -> float:
        sq = sqrt_psd(self.n)
        a = sq.data @ _op(w0).data @ sq.data
        b = sq.data @ _op(w1).data @ sq.data
        return 0.5 * float(np.vdot(self.q0.data, a).real + np.vdot(self.q1.data, b).real)


def _ancilla_labels(labels):
    return tuple(SystemLabel(x, l.dim) for x, l in zip(ANCILLA_NAMES, labels))


def build_realization(n, w0, w1, strategy: Strategy | None = None, tol: float = STRATEGY_TOL) -> Realization:
    """Realize a strategy with non-signalling total ``n``.

    Without ``strategy`` the Helstrom split of ``sqrt(N)(W0 - W1)sqrt(N)``
    is used; either way the effects are pulled back through the
    pseudo-inverse of ``sqrt(N)`` and completed with ``1 - Pi_im(N)``.
    """
    n_op = canonical(n.op if hasattr(n, "op") else n)
    chk = is_nonsignalling(n_op, tol)
    if not chk:
        raise ValidationError(f"N is not non-signalling: {chk.residuals}")
    labels = n_op.labels
    sq = sqrt_psd(n_op, clamp=-tol)
    sq_inv, proj = pseudo_inverse_sqrt(n_op, clamp=-tol, rank_tol=1e-10)
    if strategy is None:
        delta = HermitianOperator(labels, sq.data @ (_op(w0).data - _op(w1).data) @ sq.data)
        w, v = hermitian_eig(delta)
        pos = v[:, w > 0]
        p_plus = pos @ pos.conj().T
        s0 = sq.data @ p_plus @ sq.data
    else:
        s0 = strategy.s0.data
    qt0 = sq_inv.data @ s0 @ sq_inv.data
    side = n_op.side
    anc = _ancilla_labels(labels)
    q0 = HermitianOperator(anc, np.eye(side) - proj.data + qt0, tol=1e-6)
    q1 = HermitianOperator(anc, np.eye(side) - q0.data)
    vec_id = np.eye(side).reshape(-1)
    v = np.kron(np.eye(side), sq.data) @ vec_id
    k = HermitianOperator(anc + labels, np.outer(v, v.conj()))
    return Realization(k, q0, q1, n_op)
