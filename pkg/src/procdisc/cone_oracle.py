"""Sampling checks of the duality between process matrices and
non-signalling channels, and sampled lower bounds on the base norm.

Nothing here feeds back into :mod:`procdisc.discrimination`; the functions
exist to test it from an independent angle.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .process_matrices import (
    AI, AO, BI, BO,
    canonical,
    make_cns_example,
    party_labels,
    project_LV,
    random_process_matrix,
)
from .quantum_networks import is_nonsignalling, random_channel
from .tensor_core import HermitianOperator, sqrt_psd, tensor, trace_norm

AFFINE_RANGE = (-1.0, 2.0)
FORWARD_TOL = 1e-9
CONVERSE_TOL = 1e-8


def random_product_nonsignalling(rng: np.random.Generator, dims=(2, 2, 2, 2)) -> HermitianOperator:
    """Choi matrix of ``Phi_A (x) Phi_B`` for two random channels."""
    labels = party_labels(*dims)
    lab = {l.name: l for l in labels}
    ca = random_channel(rng, (lab[AI],), (lab[AO],))
    cb = random_channel(rng, (lab[BI],), (lab[BO],))
    return canonical(tensor(ca.op, cb.op))


def random_affine_nonsignalling(rng: np.random.Generator, dims=(2, 2, 2, 2), tries: int = 50) -> HermitianOperator:
    """``a P1 + (1 - a) P2`` for product channels ``P1, P2`` and ``a`` drawn
    from [-1, 2], redrawn until the combination is PSD."""
    p1 = random_product_nonsignalling(rng, dims)
    p2 = random_product_nonsignalling(rng, dims)
    for _ in range(tries):
        a = rng.uniform(*AFFINE_RANGE)
        x = p1 * a + p2 * (1.0 - a)
        if x.eigvalsh()[0] >= -1e-12:
            return x
    return p1 * 0.5 + p2 * 0.5


def sample_nonsignalling(rng: np.random.Generator, n: int, dims=(2, 2, 2, 2)) -> list[HermitianOperator]:
    """``n`` samples, alternating product and affine-combination draws."""
    return [random_product_nonsignalling(rng, dims) if k % 2 == 0 else random_affine_nonsignalling(rng, dims)
            for k in range(n)]


def orthogonal_to_process_span(x: HermitianOperator) -> HermitianOperator:
    """The affine solution of ``tr(X W) = 1`` for all process matrices ``W``
    closest to ``x``: remove the projection onto their span and fix the trace."""
    x = canonical(x)
    d = {l.name: l.dim for l in x.labels}
    n = x.side
    data = x.data - project_LV(x).data + (d[AI] * d[BI] / n) * np.eye(n)
    return HermitianOperator(x.labels, data)


def verify_dual_base(n_samples: int, seed: int = 0, dims=(2, 2, 2, 2)) -> dict:
    """Report on ``tr(X W) = 1`` for non-signalling ``X`` and process matrices ``W``.

    * ``forward``: sampled non-signalling ``X`` against sampled ``W``
      (the first pairing uses the standard non-separable example for qubits).
    * ``converse``: random ``X`` forced to satisfy ``tr(X W) = 1`` on the span
      of process matrices; the non-signalling residuals it then shows.
    * ``falsification``: a generic PSD ``X`` of the right trace; the largest
      deviation ``|tr(X W) - 1|`` found over the sampled ``W``.
    * ``convexity``: non-signalling residual of midpoints of consecutive samples.

    Sampling only probes the converse; certainty comes from the linear algebra.
    """
    rng = np.random.default_rng(seed)
    labels = party_labels(*dims)
    xs = sample_nonsignalling(rng, n_samples, dims)
    ws = [random_process_matrix(rng, dims).op for _ in range(n_samples)]
    if n_samples and tuple(dims) == (2, 2, 2, 2):
        ws[0] = make_cns_example().op

    forward = []
    for k, (x, w) in enumerate(zip(xs, ws)):
        kind = "product" if k % 2 == 0 else "affine"
        val = float(np.vdot(x.data, w.data).real)
        forward.append({"kind": kind, "value": val, "residual": abs(val - 1.0)})

    converse = []
    falsification = []
    n = int(np.prod(dims))
    for _ in range(n_samples):
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        raw = HermitianOperator(labels, g @ g.conj().T)
        probe = orthogonal_to_process_span(raw)
        res = is_nonsignalling(probe, tol=np.inf).residuals
        res.pop("psd")
        pairing = max(abs(float(np.vdot(probe.data, w.data).real) - 1.0) for w in ws)
        converse.append({**res, "pairing": pairing})
        scaled = raw * (dims[0] * dims[2] / raw.real_trace())
        dev = max(abs(float(np.vdot(scaled.data, w.data).real) - 1.0) for w in ws)
        falsification.append({"deviation": dev, "found": dev > 1e-6})

    convexity = [
        max(v for k, v in is_nonsignalling((a + b) * 0.5, tol=np.inf).residuals.items() if k != "psd")
        for a, b in zip(xs, xs[1:])
    ]

    def worst(rows, keys):
        return max((r[k] for r in rows for k in keys), default=0.0)

    report = {
        "n_samples": n_samples,
        "seed": seed,
        "dims": list(dims),
        "forward": forward,
        "converse": converse,
        "falsification": falsification,
        "convexity": convexity,
        "max_forward_residual": worst(forward, ["residual"]),
        "max_converse_residual": worst(converse, ["tp", "marginal_a", "marginal_b", "pairing"]),
        "max_convexity_residual": max(convexity, default=0.0),
        "falsified": sum(r["found"] for r in falsification),
    }
    report["ok"] = (report["max_forward_residual"] <= FORWARD_TOL
                    and report["max_converse_residual"] <= CONVERSE_TOL
                    and report["max_convexity_residual"] <= 1e-10
                    and report["falsified"] == len(falsification))
    return report


def conjugated_trace_norm(n: HermitianOperator, x: HermitianOperator) -> float:
    """``|| sqrt(N) x sqrt(N) ||_1``."""
    sq = sqrt_psd(canonical(n), clamp=-1e-9)
    y = sq.data @ canonical(x).data @ sq.data
    return trace_norm(HermitianOperator(sq.labels, y, tol=1e-6))


def sampled_lower_bounds(x: HermitianOperator, samples: Iterable[HermitianOperator]) -> np.ndarray:
    return np.array([conjugated_trace_norm(n, x) for n in samples])


def base_norm_sampled_lower_bound(x: HermitianOperator, n_samples: int, seed: int = 0,
                                  extra: Iterable[HermitianOperator] = ()) -> float:
    """Largest ``|| sqrt(N) x sqrt(N) ||_1`` over sampled non-signalling ``N``
    (plus any ``extra`` candidates); never above the base norm of ``x``."""
    x = canonical(x)
    d = x.dims
    rng = np.random.default_rng(seed)
    samples = sample_nonsignalling(rng, n_samples, d) + [canonical(e) for e in extra]
    if not samples:
        return 0.0
    return float(sampled_lower_bounds(x, samples).max())
