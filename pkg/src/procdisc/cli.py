"""``procdisc`` command line.

Every command prints one JSON document on stdout with ``--json``, or an
indented ``key: value`` summary otherwise.  Exit codes: 0 success, 1 the
input is well formed but fails a semantic condition, 2 the input cannot be
read, 3 the solver did not converge.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .cone_oracle import verify_dual_base
from .discrimination import (
    build_realization,
    classify,
    distance_to_class,
    p_succ,
    solve_adaptive,
    base_norm_sdp,
)
from .errors import LabelError, SolverError, ValidationError
from .process_matrices import (
    ProcessClass,
    ProcessMatrix,
    canonical,
    comb_ab_residuals,
    comb_ba_residuals,
    free_residual,
    validate_def1,
    validate_def2,
)
from .protocols import perfect_probability, random_perfect_pair, simulate_order

EXIT_OK, EXIT_SEMANTIC, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_TOL = 1e-7
CLASS_CHOICES = ("free", "comb-ab", "comb-ba", "sep")


class CommandFailed(Exception):
    """Semantic failure carrying a partial report."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}


def _complex_doc(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def _load(path: str):
    """Read a matrix file and put it in the canonical AI, AO, BI, BO order."""
    op = io.read_matrix(path)
    try:
        return canonical(op)
    except LabelError as exc:
        raise io.MatrixFileError(f"{path}: {exc}") from exc


def _load_process(path: str, tol: float, force: bool = False):
    op = _load(path)
    if force:
        return ProcessMatrix(op)
    try:
        return ProcessMatrix.from_operator(op, tol)
    except ValidationError as exc:
        raise CommandFailed(f"{path}: {exc}", {"file": path, "valid": False}) from exc


def _write(out_dir: Path | None, name: str, op) -> str | None:
    if out_dir is None:
        return None
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.json"
    io.write_matrix(path, op)
    return str(path)


def cmd_validate(args) -> tuple[int, dict]:
    op = _load(args.path)
    d1 = validate_def1(op, args.tol)
    d2 = validate_def2(op, args.tol)
    report = {
        "file": args.path,
        "valid": bool(d1),
        "tol": args.tol,
        "residuals": d1.residuals,
        "marginal_residuals": d2.residuals,
        "min_eigenvalue": float(op.eigvalsh()[0]),
    }
    return (EXIT_OK if d1 else EXIT_SEMANTIC), report


def cmd_classify(args) -> tuple[int, dict]:
    w = _load_process(args.path, args.tol)
    cls = classify(w, tol=args.tol)
    report = {
        "file": args.path,
        "class": cls.value,
        "free_residual": free_residual(w.op),
        "comb_ab_residuals": comb_ab_residuals(w.op),
        "comb_ba_residuals": comb_ba_residuals(w.op),
    }
    return EXIT_OK, report


def cmd_psucc(args) -> tuple[int, dict]:
    w0 = _load_process(args.path0, args.tol, args.force)
    w1 = _load_process(args.path1, args.tol, args.force)
    if w0.labels != w1.labels:
        raise CommandFailed("dimension mismatch", {"dims0": w0.dims, "dims1": w1.dims})
    out = Path(args.out) if args.out else None
    res = p_succ(w0, w1, validate=False)
    strat = res.strategy
    report = {
        "p_succ": res.p_succ,
        "gap": res.gap,
        "residual": res.residual,
        "strategy_residuals": strat.residuals(),
        "strategy_replay": strat.success_probability(w0, w1),
        "certificate_violation": res.certificate.violation(w0.op * 0.5, w1.op * 0.5),
        "files": {"S0": _write(out, "strategy_S0", strat.s0), "S1": _write(out, "strategy_S1", strat.s1)},
    }
    if args.adaptive:
        try:
            ad = solve_adaptive(w0, w1)
            report.update(p_adapt=ad.p_adapt, adaptive_gap=ad.gap)
        except ValidationError as exc:
            report.update(p_adapt=None, adaptive_error=str(exc))
    if args.realize:
        real = build_realization(strat.total, w0, w1, strat)
        report["realization_probability"] = real.probability(w0, w1)
        report["files"].update({
            "K": _write(out, "realization_K", real.k),
            "Q0": _write(out, "realization_Q0", real.q0),
            "Q1": _write(out, "realization_Q1", real.q1),
        })
    return EXIT_OK, report


def cmd_distance(args) -> tuple[int, dict]:
    w = _load_process(args.path, args.tol)
    res = distance_to_class(w, args.set)
    cls = ProcessClass(args.set)
    closest = res.closest.op
    check = validate_def1(closest, 1e-6)
    if cls is ProcessClass.FREE:
        member = free_residual(closest)
    elif cls is ProcessClass.COMB_AB:
        member = max(comb_ab_residuals(closest).values())
    elif cls is ProcessClass.COMB_BA:
        member = max(comb_ba_residuals(closest).values())
    else:
        member = 0.0  # membership is by construction: a PSD split into two combs
    report = {
        "file": args.path,
        "set": args.set,
        "distance": res.distance,
        "cross_check": res.cross_check,
        "gap": res.gap,
        "residual": res.residual,
        "closest_valid": bool(check),
        "closest_class_residual": member,
        "files": {"closest": _write(Path(args.out) if args.out else None, f"closest_{args.set}", closest)},
    }
    code = EXIT_OK if check and member <= 1e-6 else EXIT_SEMANTIC
    return code, report


def cmd_basenorm(args) -> tuple[int, dict]:
    x = _load(args.path0)
    if args.path1:
        y = _load(args.path1)
        if x.labels != y.labels:
            raise CommandFailed("dimension mismatch")
        x = x - y
    res = base_norm_sdp(x)
    return EXIT_OK, {"base_norm": res.p_succ, "gap": res.gap, "residual": res.residual}


def cmd_demo_perfect(args) -> tuple[int, dict]:
    if args.dim < 2:
        raise CommandFailed("--dim must be at least 2")
    pp = random_perfect_pair(np.random.default_rng(args.seed), args.dim)
    d = pp.d
    regs = {}
    for order in ("AB", "BA"):
        probs = np.clip(np.real(np.diag(simulate_order(pp, order).data)), 0.0, None).reshape(d, d)
        regs[order] = probs.tolist()
    report = {
        "dim": d,
        "seed": args.seed,
        "rho": _complex_doc(pp.rho),
        "unitary": _complex_doc(pp.unitary),
        "eigenvalues": pp.eigenvalues.tolist(),
        "registers": regs,
        "register_supports": {
            order: [[i, j] for i in range(d) for j in range(d) if regs[order][i][j] > 1e-12]
            for order in regs
        },
        "probability": perfect_probability(pp),
    }
    if args.sdp:
        report["sdp_p_succ"] = p_succ(pp.w_ab, pp.w_ba).p_succ
    return EXIT_OK, report


def cmd_cone_report(args) -> tuple[int, dict]:
    report = verify_dual_base(args.samples, seed=args.seed)
    return (EXIT_OK if report["ok"] else EXIT_SEMANTIC), report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="validation tolerance")

    parser = argparse.ArgumentParser(prog="procdisc", description="Process matrix discrimination toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the process matrix conditions")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", parents=[common], help="most specific causal class")
    p.add_argument("path")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("psucc", parents=[common], help="optimal success probability for two matrices")
    p.add_argument("path0")
    p.add_argument("path1")
    p.add_argument("--adaptive", action="store_true", help="also solve over two-step testers")
    p.add_argument("--realize", action="store_true", help="build the ancilla realization of the strategy")
    p.add_argument("--force", action="store_true", help="skip process matrix validation")
    p.add_argument("--out", help="directory for strategy and realization matrix files")
    p.set_defaults(func=cmd_psucc)

    p = sub.add_parser("distance", parents=[common], help="distance to a causal class")
    p.add_argument("path")
    p.add_argument("--set", required=True, choices=CLASS_CHOICES)
    p.add_argument("--out", help="directory for the closest member matrix file")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("basenorm", parents=[common], help="base norm of X or of X0 - X1")
    p.add_argument("path0")
    p.add_argument("path1", nargs="?")
    p.set_defaults(func=cmd_basenorm)

    p = sub.add_parser("demo-perfect", parents=[common], help="perfect discrimination of the two orders")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sdp", action="store_true", help="also solve the discrimination SDP")
    p.set_defaults(func=cmd_demo_perfect)

    p = sub.add_parser("cone-report", parents=[common], help="sampled duality report")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cone_report)
    return parser


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _emit(report: dict, as_json: bool, stream) -> None:
    report = _jsonable(report)
    if as_json:
        json.dump(report, stream, indent=2, sort_keys=True)
        stream.write("\n")
        return
    for key, val in report.items():
        if isinstance(val, (dict, list)):
            val = json.dumps(val)
            if len(val) > 120:
                val = val[:117] + "..."
        stream.write(f"{key}: {val}\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, report = args.func(args)
    except (io.MatrixFileError, LabelError) as exc:
        code, report = EXIT_INPUT, {"error": str(exc)}
    except CommandFailed as exc:
        code, report = EXIT_SEMANTIC, {"error": str(exc), **exc.report}
    except ValidationError as exc:
        code, report = EXIT_SEMANTIC, {"error": str(exc)}
    except SolverError as exc:
        code, report = EXIT_NUMERICAL, {"error": str(exc)}
    _emit(report, args.json, sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
