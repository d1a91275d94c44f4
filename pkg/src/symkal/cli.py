"""Command-line interface.

Subcommands: analyze, decompose, verify, example, generate.  Exit codes:
0 success, 2 validation failure, 3 ambiguous rank decision, 4 output write
failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, optomech
from .documents import (
    canonical_json,
    decomposition_to_report,
    matrix_to_lists,
    parse_report,
    parse_system_document,
    physical_to_document,
    system_to_document,
)
from .errors import DocumentError, RankAmbiguityError, SymkalError
from .kalman import (
    LABEL_MEANINGS,
    class_dimension_oracles,
    kalman_decompose,
    pattern_residuals,
    state_labels,
)
from .linalg import TolerancePolicy, jmat, sharp_adjoint
from .model import random_system

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_AMBIGUOUS = 3
EXIT_WRITE = 4
EXIT_VERIFY = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symkal",
        description="Kalman decomposition of quadrature-form linear systems "
                    "by real symplectic transformations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("--tolerance", type=float, default=1.0,
                       help="rank threshold scale (default 1.0)")
        p.add_argument("--mode", choices=("strict", "relaxed"), default="strict",
                       help="factorization mode (default strict)")
        if output:
            p.add_argument("--format", choices=("json", "text"), default="json")
            p.add_argument("--output", default=None, help="write to this path instead of stdout")

    p_an = sub.add_parser("analyze", help="print dimensions, labels and residual summary")
    p_an.add_argument("input", nargs="?", default=None, help="system document path")
    p_an.add_argument("--builtin", action="store_true",
                      help="analyze the built-in optomechanical example instead of a file")
    p_an.add_argument("--omega", type=float, default=1.0)
    p_an.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_an.add_argument("--gamma", type=float, default=1.0)
    common(p_an, output=False)

    p_de = sub.add_parser("decompose", help="write a full decomposition report")
    p_de.add_argument("input", help="system document path")
    common(p_de)

    p_ve = sub.add_parser("verify", help="recheck a stored report against its system")
    p_ve.add_argument("input", help="system document path")
    p_ve.add_argument("report", help="decomposition report path")
    p_ve.add_argument("--tolerance", type=float, default=1.0,
                      help="rank threshold scale (default 1.0)")
    p_ve.add_argument("--check-tol", type=float, default=1e-8,
                      help="residual tolerance for the recheck (default 1e-8)")

    p_ex = sub.add_parser("example", help="emit the built-in optomechanical example")
    p_ex.add_argument("--omega", type=float, default=1.0)
    p_ex.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_ex.add_argument("--gamma", type=float, default=1.0)
    common(p_ex)

    p_ge = sub.add_parser("generate", help="write a random system document")
    p_ge.add_argument("--n", type=int, required=True, help="mode count")
    p_ge.add_argument("--m", type=int, required=True, help="field count")
    p_ge.add_argument("--seed", type=int, default=0)
    p_ge.add_argument("--output", default=None)
    return parser


def _emit(text: str, output_path) -> None:
    if output_path is None:
        sys.stdout.write(text)
    else:
        with open(output_path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise DocumentError("document", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError("document", f"{path} is not valid JSON: {exc}") from exc


def _load_system(path: str, tolerance_flag: float):
    system, tol_doc = parse_system_document(_load_json(path))
    scale = tol_doc if tol_doc is not None else tolerance_flag
    return system, TolerancePolicy(scale=scale)


def _analyze_text(dec) -> str:
    lines = [
        f"k={dec.k} l={dec.l} d={dec.d}",
        "labels: " + " ".join(dec.labels),
    ]
    for label in sorted(set(dec.labels)):
        lines.append(f"  {label}: {LABEL_MEANINGS[label]}")
    checks = dec.residual_report
    lines.append(f"symplecticity residual: {checks.ccr_residual:.3e}")
    lines.append(f"pattern residual: {checks.pattern_residual:.3e} (allowed {checks.pattern_scale:.3e})")
    lines.append(f"subspace angles: controllable {checks.controllable_angle:.3e}, "
                 f"unobservable {checks.unobservable_angle:.3e}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    if args.builtin == (args.input is not None):
        sys.stderr.write("analyze needs a document path or --builtin (not both)\n")
        return EXIT_INVALID
    if args.builtin:
        system = optomech.build(args.omega, args.lam, args.gamma)
        policy = TolerancePolicy(scale=args.tolerance)
    else:
        system, policy = _load_system(args.input, args.tolerance)
    dec = kalman_decompose(system, policy=policy, mode=args.mode)
    sys.stdout.write(_analyze_text(dec))
    return EXIT_OK


def cmd_decompose(args) -> int:
    system, policy = _load_system(args.input, args.tolerance)
    dec = kalman_decompose(system, policy=policy, mode=args.mode)
    report = decomposition_to_report(dec, mode=args.mode, policy=policy)
    if args.format == "json":
        text = canonical_json(report)
    else:
        text = _analyze_text(dec)
    try:
        _emit(text, args.output)
    except OSError as exc:
        sys.stderr.write(f"cannot write output: {exc}\n")
        return EXIT_WRITE
    return EXIT_OK


def cmd_verify(args) -> int:
    system, policy = _load_system(args.input, args.tolerance)
    stored = parse_report(_load_json(args.report))
    n = system.n
    tol = args.check_tol
    if stored["k"] + stored["l"] + stored["d"] != n:
        sys.stderr.write(f"dims: k+l+d = {stored['k'] + stored['l'] + stored['d']} != n = {n}\n")
        return EXIT_VERIFY

    V = stored["V"]
    k, l, d = stored["k"], stored["l"], stored["d"]
    J = jmat(n)
    failures = []
    results = {}

    ccr = float(np.linalg.norm(V @ J @ V.T - J))
    results["symplecticity"] = ccr
    if ccr > max(tol, 1e-9):
        failures.append("symplecticity")

    V_inv = sharp_adjoint(V)
    scale = 1.0 + float(np.linalg.norm(stored["A_hat"]))
    consistency = max(
        float(np.linalg.norm(stored["A_hat"] - V @ system.A @ V_inv)),
        float(np.linalg.norm(stored["B_hat"] - V @ system.B)),
        float(np.linalg.norm(stored["C_hat"] - system.C @ V_inv)),
        float(np.linalg.norm(stored["D"] - system.D)),
    )
    results["transformed_matrices"] = consistency
    if consistency > tol * scale:
        failures.append("transformed_matrices")

    pattern = max(pattern_residuals(stored["A_hat"], stored["B_hat"], stored["C_hat"], k, l, d))
    results["pattern"] = pattern
    if pattern > tol * scale:
        failures.append("pattern")

    k_oracle, l_oracle = class_dimension_oracles(system, policy)
    results["k_oracle"] = k_oracle
    results["l_oracle"] = l_oracle
    if (k_oracle, l_oracle) != (k, l):
        failures.append("dims_vs_oracles")

    if list(stored["labels"]) != list(state_labels(k, l, d)):
        failures.append("labels")

    for name, value in results.items():
        sys.stdout.write(f"{name}: {value:.6e}\n" if isinstance(value, float)
                         else f"{name}: {value}\n")
    if failures:
        sys.stderr.write("failed checks: " + ", ".join(failures) + "\n")
        return EXIT_VERIFY
    sys.stdout.write("all checks passed\n")
    return EXIT_OK


def cmd_example(args) -> int:
    system, dec, refined, pair, a, b = optomech.run(
        args.omega, args.lam, args.gamma,
        policy=TolerancePolicy(scale=args.tolerance), mode=args.mode)
    policy = TolerancePolicy(scale=args.tolerance)
    payload = {
        "schema": 1,
        "parameters": {"omega": args.omega, "lambda": args.lam, "gamma": args.gamma},
        "coefficients": {"a": a, "b": b},
        "system": physical_to_document(optomech.physical_spec(args.gamma),
                                       optomech.hamiltonian_matrix(args.omega, args.lam)),
        "report": decomposition_to_report(dec, mode=args.mode, policy=policy),
        "refinement": {
            "X": matrix_to_lists(pair.X),
            "Y": matrix_to_lists(pair.Y),
            "report": decomposition_to_report(refined, mode=args.mode, policy=policy),
        },
    }
    if args.format == "json":
        text = canonical_json(payload)
    else:
        lines = [
            f"omega={args.omega} lambda={args.lam} gamma={args.gamma}",
            f"a={a!r} b={b!r}",
            _analyze_text(dec).rstrip("\n"),
            "refined transformation:",
        ]
        for row in refined.V:
            lines.append("  [" + " ".join(f"{x: .6f}" for x in row) + "]")
        text = "\n".join(lines) + "\n"
    try:
        _emit(text, args.output)
    except OSError as exc:
        sys.stderr.write(f"cannot write output: {exc}\n")
        return EXIT_WRITE
    return EXIT_OK


def cmd_generate(args) -> int:
    system = random_system(args.n, args.m, seed=args.seed)
    text = canonical_json(system_to_document(system))
    try:
        _emit(text, args.output)
    except OSError as exc:
        sys.stderr.write(f"cannot write output: {exc}\n")
        return EXIT_WRITE
    return EXIT_OK


_DISPATCH = {
    "analyze": cmd_analyze,
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "example": cmd_example,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except RankAmbiguityError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_AMBIGUOUS
    except SymkalError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
