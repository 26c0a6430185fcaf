"""Command-line front end.

Subcommands::

    epismooth solve <file> [--mu0 --rho --kmax --tol --guard --outdir]
    epismooth verify <suite> [--seed --out]
    epismooth prox <name> --x <csv> [--mu ...]
    epismooth catalog

`solve` reads a JSON problem file, runs penalty continuation, writes a stage
trace CSV and a summary JSON, and exits with 0 for a KKT point, 3 for an
infeasible stationary point, 4 when undetermined, and 2 on input errors.
`verify` runs a named probe suite over the built-in catalog and emits one
JSON report line per probe; it exits 0 only if every expected pass passes
and every negative control fails.  All numeric output is printed with 17
significant digits, and a fixed seed reproduces outputs byte for byte.  The
EPISMOOTH_SEED environment variable overrides the default seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .catalog import (
    BUILTIN_PROBLEMS,
    PROBLEM_DESCRIPTIONS,
    PROX_FUNCTIONS,
    ProblemFileError,
    build_problem,
    load_problem_file,
    prox_oracle,
)
from .constrained import (
    CLASS_INFEASIBLE,
    CLASS_KKT,
    CLASS_UNDETERMINED,
    ConstrainedProblem,
    KKTTolerances,
    kkt_report,
)
from .errors import ConvergenceError
from .exprdsl import ExpressionSyntaxError
from .smoothing import SmoothFunction, moreau_envelope, moreau_gradient, moreau_prox
from .solver import continuation_solve
from .suites import SUITE_NAMES, run_suite, suite_passed

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_INFEASIBLE = 3
EXIT_UNDETERMINED = 4
EXIT_VERIFY_FAILED = 1

TRACE_HEADER = "k,mu,grad_norm,eval,feas_residual,stat_residual,cone_residual,guard"


# ---------------------------------------------------------------------------
# full-precision serialization
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    if np.isfinite(v):
        return f"{v:.17g}"
    return '"inf"' if v > 0 else ('"-inf"' if v < 0 else '"nan"')


def dumps17(obj) -> str:
    """JSON text with floats at 17 significant digits and sorted keys."""
    if isinstance(obj, dict):
        parts = [f"{json.dumps(str(k))}: {dumps17(obj[k])}" for k in sorted(obj)]
        return "{" + ", ".join(parts) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps17(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dumps17(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def _parse_vector(text):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise ProblemFileError(f"expected a comma-separated vector, got {text!r}") from exc


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _augmented_objective(built, mu) -> SmoothFunction:
    """Objective plus the smoothed regularizers frozen at one mu, for
    residual bookkeeping on regularized constrained problems."""
    if not built.regularizers:
        return built.objective
    regs = built.regularizers

    def value(x):
        return float(built.objective.value(x)) + sum(r.eval(x, mu) for r in regs)

    def gradient(x):
        g = np.asarray(built.objective.gradient(x), dtype=float).copy()
        for r in regs:
            g = g + r.grad(x, mu)
        return g

    return SmoothFunction(value=value, gradient=gradient, name=built.objective.name)


def _stage_residuals(built, stage, tols):
    if built.constrained is None:
        return 0.0, stage.grad_norm, 0.0
    problem = ConstrainedProblem(
        objective=_augmented_objective(built, stage.mu),
        h=built.constrained.h,
        C=built.constrained.C,
    )
    report = kkt_report(problem, stage.x, stage.multiplier, tols)
    return (
        report.feasibility_residual,
        report.stationarity_residual,
        report.cone_residual,
    )


def cmd_solve(args) -> int:
    try:
        doc = load_problem_file(args.file)
        built = build_problem(doc)
    except (ProblemFileError, ExpressionSyntaxError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    config = built.config
    overrides = {}
    if args.mu0 is not None:
        overrides["mu0"] = args.mu0
    if args.rho is not None:
        overrides["rho"] = args.rho
    if args.kmax is not None:
        overrides["k_max"] = args.kmax
    if args.tol is not None:
        overrides["final_tols"] = KKTTolerances(args.tol, args.tol, args.tol)
    if args.guard is not None:
        if built.constrained is None:
            print("error: --guard requires a constrained problem", file=sys.stderr)
            return EXIT_INPUT_ERROR
        if args.guard == "file":
            if built.feasible_point is None:
                print("error: problem file has no feasible_point", file=sys.stderr)
                return EXIT_INPUT_ERROR
            overrides["guard"] = built.feasible_point
        else:
            try:
                overrides["guard"] = _parse_vector(args.guard)
            except ProblemFileError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_INPUT_ERROR
    if overrides:
        config = dataclasses.replace(config, **overrides)

    try:
        result = continuation_solve(
            built.family, config, built.x0, diagnostics=built.constrained
        )
    except (ConvergenceError, ValueError) as exc:
        print(f"error: solve failed: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    tols = config.final_tols
    if built.constrained is not None:
        final_problem = ConstrainedProblem(
            objective=_augmented_objective(built, result.mu),
            h=built.constrained.h,
            C=built.constrained.C,
        )
        last = result.trace.stages[-1]
        report = kkt_report(final_problem, last.x, last.multiplier, tols)
        classification = report.classification
        residuals = {
            "stationarity": report.stationarity_residual,
            "feasibility": report.feasibility_residual,
            "cone": report.cone_residual,
        }
        multiplier = result.trace.stages[-1].multiplier
    else:
        classification = (
            CLASS_KKT if result.grad_norm <= tols.stationarity else CLASS_UNDETERMINED
        )
        residuals = {
            "stationarity": result.grad_norm,
            "feasibility": 0.0,
            "cone": 0.0,
        }
        multiplier = np.zeros(0)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    trace_path = outdir / f"{built.name}_trace.csv"
    lines = [TRACE_HEADER]
    for stage in result.trace.stages:
        feas, stat, cone = _stage_residuals(built, stage, tols)
        guard_cell = "" if stage.guard_accepted is None else str(int(stage.guard_accepted))
        lines.append(",".join([
            str(stage.k),
            f"{stage.mu:.17g}",
            f"{stage.grad_norm:.17g}",
            f"{stage.value:.17g}",
            f"{feas:.17g}",
            f"{stat:.17g}",
            f"{cone:.17g}",
            guard_cell,
        ]))
    trace_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    summary = {
        "name": built.name,
        "classification": classification,
        "status": result.status,
        "x": result.x,
        "y": multiplier,
        "residuals": residuals,
        "mu_final": result.mu,
        "eval": result.value,
        "stages": len(result.trace.stages),
    }
    summary_path = outdir / f"{built.name}_summary.json"
    text = dumps17(summary)
    summary_path.write_text(text + "\n", encoding="utf-8")
    print(text)

    if classification == CLASS_KKT:
        return EXIT_OK
    if classification == CLASS_INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_UNDETERMINED


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _default_seed():
    env = os.environ.get("EPISMOOTH_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ProblemFileError(f"EPISMOOTH_SEED must be an integer, got {env!r}")
    return 0


def cmd_verify(args) -> int:
    if args.suite not in SUITE_NAMES:
        print(
            f"error: unknown suite {args.suite!r}; choose from {', '.join(SUITE_NAMES)}",
            file=sys.stderr,
        )
        return EXIT_INPUT_ERROR
    try:
        seed = args.seed if args.seed is not None else _default_seed()
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    entries = run_suite(args.suite, seed=seed)
    text = "\n".join(dumps17(e) for e in entries) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if suite_passed(entries) else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# prox
# ---------------------------------------------------------------------------

def cmd_prox(args) -> int:
    try:
        x = _parse_vector(args.x)
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if args.mu <= 0:
        print("error: --mu must be positive", file=sys.stderr)
        return EXIT_INPUT_ERROR
    lo = _parse_vector(args.lo) if args.lo is not None else None
    hi = _parse_vector(args.hi) if args.hi is not None else None
    try:
        oracle = prox_oracle(
            args.function, x.size, weight=args.weight, kappa=args.kappa,
            epsilon=args.epsilon, lo=lo, hi=hi,
        )
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    out = {
        "function": args.function,
        "x": x,
        "mu": args.mu,
        "prox": moreau_prox(oracle, args.mu, x),
        "envelope_value": moreau_envelope(oracle, args.mu, x),
        "envelope_gradient": moreau_gradient(oracle, args.mu, x),
    }
    print(dumps17(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def cmd_catalog(args) -> int:
    for name in BUILTIN_PROBLEMS:
        print(f"{name}: {PROBLEM_DESCRIPTIONS[name]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epismooth",
        description="Smoothing toolkit: penalty continuation, envelopes, verification probes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file by penalty continuation")
    p_solve.add_argument("file")
    p_solve.add_argument("--mu0", type=float, default=None)
    p_solve.add_argument("--rho", type=float, default=None)
    p_solve.add_argument("--kmax", type=int, default=None)
    p_solve.add_argument("--tol", type=float, default=None)
    p_solve.add_argument(
        "--guard", nargs="?", const="file", default=None,
        help="feasible guard point as CSV, or no value to use the file's feasible_point",
    )
    p_solve.add_argument("--outdir", default=".")
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite")
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.add_argument("--out", default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_prox = sub.add_parser("prox", help="prox and envelope of a catalog function")
    p_prox.add_argument("function", help=f"one of: {', '.join(PROX_FUNCTIONS)}")
    p_prox.add_argument("--x", required=True, help="point as comma-separated values")
    p_prox.add_argument("--mu", type=float, default=1.0)
    p_prox.add_argument("--weight", type=float, default=1.0)
    p_prox.add_argument("--kappa", type=float, default=1.0)
    p_prox.add_argument("--epsilon", type=float, default=0.5)
    p_prox.add_argument("--lo", default=None)
    p_prox.add_argument("--hi", default=None)
    p_prox.set_defaults(func=cmd_prox)

    p_catalog = sub.add_parser("catalog", help="list built-in problems")
    p_catalog.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
