"""Acceptance criteria; each test prints one PASS/FAIL line."""
import time
from functools import lru_cache

import numpy as np

import conftest
from procdisc.cone_oracle import base_norm_sampled_lower_bound, verify_dual_base
from procdisc.discrimination import base_norm_sdp, build_realization, distance_to_class, p_succ, solve_adaptive
from procdisc.process_matrices import (
    make_cns_example,
    make_free,
    maximally_mixed,
    party_labels,
    pauli_twirl_family,
    project_LV,
    random_comb_ab,
    random_process_matrix,
    validate_def1,
    validate_def2,
)
from procdisc.protocols import perfect_probability, random_perfect_pair
from procdisc.quantum_networks import random_state
from procdisc.tensor_core import HermitianOperator, labels_of

from test_process_matrices import validity_corpus

EXPECTED_DISTANCES = {"free": 1.0, "comb-ab": 0.7071068, "comb-ba": 0.7071068, "sep": 0.2928932}
GAP_LIMIT = 1e-7
RESIDUAL_LIMIT = 1e-8


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


# -- shared solves (each runs once per session) ---------------------------------

@lru_cache(maxsize=None)
def distance_runs():
    out = {}
    for cls in EXPECTED_DISTANCES:
        t0 = time.perf_counter()
        res = distance_to_class(make_cns_example(), cls)
        out[cls] = (res, time.perf_counter() - t0)
    return out


@lru_cache(maxsize=None)
def perfect_runs():
    out = []
    for k, d in enumerate([2] * 5 + [3] * 5):
        pp = random_perfect_pair(np.random.default_rng(1000 + k), d)
        out.append((d, perfect_probability(pp), p_succ(pp.w_ab, pp.w_ba)))
    return out


def free_oracle(rho, sigma):
    return 0.5 + 0.25 * float(np.sum(np.abs(np.linalg.eigvalsh(rho.data - sigma.data))))


@lru_cache(maxsize=None)
def free_runs():
    rng = np.random.default_rng(77)
    lab = labels_of(("AI", 2), ("BI", 2))
    out = []
    for _ in range(20):
        rho, sigma = random_state(rng, lab), random_state(rng, lab)
        out.append((free_oracle(rho, sigma), p_succ(make_free(rho), make_free(sigma))))
    return out


@lru_cache(maxsize=None)
def adaptive_runs():
    rng = np.random.default_rng(88)
    out = []
    for _ in range(20):
        w0, w1 = random_comb_ab(rng), random_comb_ab(rng)
        out.append((p_succ(w0, w1), solve_adaptive(w0, w1)))
    return out


# -- criteria --------------------------------------------------------------------

def test_criterion_1_distances(capsys):
    runs = distance_runs()
    errs = {cls: abs(res.distance - EXPECTED_DISTANCES[cls]) for cls, (res, _) in runs.items()}
    slowest = max(t for _, t in runs.values())
    ok = max(errs.values()) <= 1e-4 and slowest < 60
    values = ", ".join(f"{cls}={runs[cls][0].distance:.7f}" for cls in runs)
    report(capsys, 1, ok, f"distances {values}; max error {max(errs.values()):.1e}; slowest solve {slowest:.1f}s")


def test_criterion_2_perfect_discrimination(capsys):
    runs = perfect_runs()
    sim_err = max(abs(p - 1.0) for _, p, _ in runs)
    sdp_min = min(res.p_succ for _, _, res in runs)
    ok = sim_err <= 1e-12 and sdp_min >= 1 - 1e-5
    dims = sorted({d for d, _, _ in runs})
    report(capsys, 2, ok, f"{len(runs)} draws at d in {dims}; simulation error {sim_err:.1e}; min SDP {sdp_min:.9f}")


def test_criterion_3_free_reduction(capsys):
    runs = free_runs()
    err = max(abs(res.p_succ - expected) for expected, res in runs)
    report(capsys, 3, err <= 1e-6, f"{len(runs)} free pairs; max |SDP - closed form| {err:.1e}")


def test_criterion_4_adaptive_equality(capsys):
    runs = adaptive_runs()
    diffs = [ad.p_adapt - res.p_succ for res, ad in runs]
    ok = max(abs(x) for x in diffs) <= 1e-5 and min(diffs) >= -1e-5
    report(capsys, 4, ok, f"{len(runs)} ordered pairs; max |p_succ - p_adapt| {max(abs(x) for x in diffs):.1e}")


def test_criterion_5_duality_certificates(capsys):
    records = [(res.gap, res.residual) for res, _ in distance_runs().values()]
    records += [(res.gap, res.residual) for _, _, res in perfect_runs()]
    records += [(res.gap, res.residual) for _, res in free_runs()]
    for res, ad in adaptive_runs():
        records += [(res.gap, res.residual), (ad.gap, ad.residual)]
    gap = max(g for g, _ in records)
    resid = max(r for _, r in records)
    ok = gap <= GAP_LIMIT and resid <= RESIDUAL_LIMIT
    report(capsys, 5, ok, f"{len(records)} solves; max gap {gap:.1e}; max residual {resid:.1e}")


def test_criterion_6_base_norm_consistency(capsys):
    rng = np.random.default_rng(99)
    consistency, excess = 0.0, -np.inf
    for k in range(20):
        w0, w1 = random_process_matrix(rng), random_process_matrix(rng)
        res = p_succ(w0, w1)
        x = w0.op - w1.op
        norm = base_norm_sdp(x).p_succ
        consistency = max(consistency, abs(4 * res.p_succ - 2 - norm))
        bound = base_norm_sampled_lower_bound(x, 10, seed=k, extra=[res.strategy.total])
        excess = max(excess, bound - norm)
    ok = consistency <= 1e-6 and excess <= 1e-6
    report(capsys, 6, ok, f"20 pairs; max |4p - 2 - base norm| {consistency:.1e}; "
                          f"max sampled bound minus SDP {excess:.1e}")


def test_criterion_7_structural_suite(capsys):
    rng = np.random.default_rng(7)
    labels = party_labels()
    lv_err = 0.0
    for _ in range(20):
        g = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        x = HermitianOperator(labels, g + g.conj().T)
        h = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        y = HermitianOperator(labels, h + h.conj().T)
        px = project_LV(x)
        lv_err = max(lv_err, np.max(np.abs(project_LV(px).data - px.data)),
                     abs(np.vdot(px.data, y.data) - np.vdot(x.data, project_LV(y).data)))

    corpus = validity_corpus(rng, 200)
    disagreements = sum(bool(validate_def1(w)) != bool(validate_def2(w)) for w in corpus)

    duality = verify_dual_base(50, seed=7)

    fam = pauli_twirl_family(make_cns_example())
    pauli_err = float(np.max(np.abs(sum(w.data for w in fam) / len(fam) - np.eye(16) / 4)))

    w0, w1 = make_cns_example(), maximally_mixed()
    res = p_succ(w0, w1)
    real = build_realization(res.strategy.total, w0, w1, res.strategy)
    replay_err = abs(real.probability(w0, w1) - res.p_succ)

    elapsed = time.monotonic() - conftest.SESSION_START
    ok = (lv_err <= 1e-10 and disagreements == 0 and duality["max_forward_residual"] <= 1e-9
          and pauli_err <= 1e-12 and replay_err <= 1e-6 and elapsed < 600)
    report(capsys, 7, ok,
           f"L_V {lv_err:.1e}; definition disagreements {disagreements}/200; "
           f"duality {duality['max_forward_residual']:.1e} on 50 pairs; Pauli average {pauli_err:.1e}; "
           f"realization replay {replay_err:.1e}; suite time {elapsed:.0f}s")
