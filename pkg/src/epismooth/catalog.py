"""Problem files and the built-in problem catalog.

A problem file is a JSON document describing one instance: a smooth
objective expression over x1..xn, optional smooth constraint rows paired
with a constraint set, optional nonsmooth regularizers smoothed through
their envelopes, an optional known feasible point, and solver overrides.
Documents are schema-checked (unknown fields rejected) before any numerics
run.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import convex_core as cc
from . import exprdsl
from .composite import SmoothMap
from .constrained import ConstrainedProblem, KKTTolerances
from .smoothing import (
    SmoothFunction,
    SmoothingFamily,
    calculus_sum_continuous,
    eplq_moreau_family,
    infconv_smoother,
    kernel_quadratic,
)
from .solver import ContinuationConfig


class ProblemFileError(ValueError):
    """The document violates the problem-file schema."""


# ---------------------------------------------------------------------------
# schema helpers
# ---------------------------------------------------------------------------

def _reject_unknown(doc, allowed, where):
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ProblemFileError(f"unknown field(s) {sorted(unknown)} in {where}")


def _number(v, where):
    if isinstance(v, str):
        if v == "inf":
            return np.inf
        if v == "-inf":
            return -np.inf
        raise ProblemFileError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemFileError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _vector(v, where):
    if not isinstance(v, list) or not v:
        raise ProblemFileError(f"{where}: expected a nonempty list of numbers")
    return np.array([_number(t, where) for t in v])


def _matrix(v, where):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ProblemFileError(f"{where}: expected a list of rows")
    return np.array([[_number(t, where) for t in row] for row in v])


def convex_set_from_descriptor(doc) -> cc.ConvexSet:
    """Build a constraint set from its JSON descriptor {type, parameters}."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise ProblemFileError("set descriptor must be an object with a 'type'")
    kind = doc["type"]
    if kind == "box":
        _reject_unknown(doc, {"type", "lo", "hi"}, "set")
        return cc.box(_vector(doc["lo"], "set.lo"), _vector(doc["hi"], "set.hi"))
    if kind == "euclidean_ball":
        _reject_unknown(doc, {"type", "center", "radius"}, "set")
        return cc.euclidean_ball(_vector(doc["center"], "set.center"),
                                 _number(doc["radius"], "set.radius"))
    if kind == "zero_cross_negative":
        _reject_unknown(doc, {"type", "s", "m"}, "set")
        return cc.zero_cross_negative(int(doc["s"]), int(doc["m"]))
    if kind == "affine_subspace":
        _reject_unknown(doc, {"type", "A", "c"}, "set")
        return cc.affine_subspace(_matrix(doc["A"], "set.A"), _vector(doc["c"], "set.c"))
    if kind == "singleton":
        _reject_unknown(doc, {"type", "point"}, "set")
        return cc.singleton(_vector(doc["point"], "set.point"))
    if kind == "nonneg_orthant":
        _reject_unknown(doc, {"type", "m"}, "set")
        return cc.nonneg_orthant(int(doc["m"]))
    if kind == "whole_space":
        _reject_unknown(doc, {"type", "m"}, "set")
        return cc.whole_space(int(doc["m"]))
    raise ProblemFileError(f"unknown set type {kind!r}")


def scale_eplq(spec: cc.EPLQSpec, weight: float) -> cc.EPLQSpec:
    """weight * theta(U, B, R, b) as theta(weight*U, B/weight, R, b)."""
    if weight == 1.0:
        return spec
    if weight <= 0:
        raise ProblemFileError("regularizer weight must be positive")
    U = spec.U
    if U.kind == "box":
        scaled = cc.box(weight * U.lo, weight * U.hi)
    else:
        scaled = cc.euclidean_ball(weight * U.center, weight * U.radius)
    return cc.EPLQSpec(U=scaled, B=spec.B / weight, R=spec.R, b=spec.b)


def regularizer_family(doc, n) -> SmoothingFamily:
    """Envelope family of one weighted regularizer descriptor."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise ProblemFileError("regularizer must be an object with a 'type'")
    kind = doc["type"]
    weight = _number(doc.get("weight", 1.0), "regularizer.weight")
    if weight <= 0:
        raise ProblemFileError("regularizer weight must be positive")
    if kind == "one_norm":
        _reject_unknown(doc, {"type", "weight"}, "regularizer")
        oracle = cc.one_norm_oracle(n, weight=weight)
        return infconv_smoother(oracle, kernel_quadratic())
    if kind == "huber":
        _reject_unknown(doc, {"type", "weight", "kappa"}, "regularizer")
        kappa = _number(doc.get("kappa", 1.0), "regularizer.kappa")
        spec = scale_eplq(cc.huber_eplq(n, kappa=kappa), weight)
        return eplq_moreau_family(spec, name=f"{weight}*huber[{kappa}]")
    if kind == "vapnik":
        _reject_unknown(doc, {"type", "weight", "epsilon"}, "regularizer")
        eps = _number(doc.get("epsilon", 0.5), "regularizer.epsilon")
        spec = scale_eplq(cc.vapnik_eplq(n, epsilon=eps), weight)
        return eplq_moreau_family(spec, name=f"{weight}*vapnik[{eps}]")
    if kind == "custom_eplq":
        _reject_unknown(doc, {"type", "weight", "U", "B", "R", "b"}, "regularizer")
        spec = cc.eplq_spec(
            convex_set_from_descriptor(doc["U"]),
            _matrix(doc["B"], "regularizer.B"),
            _matrix(doc["R"], "regularizer.R"),
            _vector(doc["b"], "regularizer.b"),
        )
        if spec.n != n:
            raise ProblemFileError(
                f"custom_eplq acts on dimension {spec.n}, problem has {n}"
            )
        return eplq_moreau_family(scale_eplq(spec, weight), name=f"{weight}*custom_eplq")
    raise ProblemFileError(f"unknown regularizer type {kind!r}")


# ---------------------------------------------------------------------------
# problem documents
# ---------------------------------------------------------------------------

_TOP_FIELDS = {
    "name", "n", "objective", "constraints", "set",
    "regularizers", "feasible_point", "solver",
}
_SOLVER_FIELDS = {"mu0", "rho", "k_max", "inner_tol0", "inner_max_iter", "tol", "x0"}


def validate_problem_document(doc) -> None:
    """Schema check; raises ProblemFileError before any numerics."""
    if not isinstance(doc, dict):
        raise ProblemFileError("problem file must contain a JSON object")
    _reject_unknown(doc, _TOP_FIELDS, "problem file")
    for key in ("name", "n", "objective"):
        if key not in doc:
            raise ProblemFileError(f"missing required field {key!r}")
    if not isinstance(doc["name"], str) or not doc["name"]:
        raise ProblemFileError("'name' must be a nonempty string")
    if not isinstance(doc["n"], int) or doc["n"] < 1:
        raise ProblemFileError("'n' must be a positive integer")
    if not isinstance(doc["objective"], str):
        raise ProblemFileError("'objective' must be an expression string")
    constraints = doc.get("constraints", [])
    if not isinstance(constraints, list) or not all(isinstance(s, str) for s in constraints):
        raise ProblemFileError("'constraints' must be a list of expression strings")
    if constraints and "set" not in doc:
        raise ProblemFileError("constraints require a 'set' descriptor")
    if "set" in doc and not constraints:
        raise ProblemFileError("a 'set' descriptor requires constraint rows")
    if "regularizers" in doc and not isinstance(doc["regularizers"], list):
        raise ProblemFileError("'regularizers' must be a list")
    if "feasible_point" in doc:
        _vector(doc["feasible_point"], "feasible_point")
    solver = doc.get("solver", {})
    if not isinstance(solver, dict):
        raise ProblemFileError("'solver' must be an object")
    _reject_unknown(solver, _SOLVER_FIELDS, "solver")


def load_problem_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"invalid JSON: {exc}") from exc
    validate_problem_document(doc)
    return doc


def _expression_map(sources, n, name) -> SmoothMap:
    rows = [exprdsl.parse(src, n) for src in sources]

    def value(x):
        return np.array([exprdsl.eval_with_gradient(r, x)[0] for r in rows])

    def jacobian(x):
        return np.vstack([exprdsl.eval_with_gradient(r, x)[1] for r in rows])

    return SmoothMap(value=value, jacobian=jacobian, n=n, m=len(rows), name=name)


@dataclass
class BuiltProblem:
    """A problem document turned into solvable objects."""

    name: str
    n: int
    family: SmoothingFamily
    objective: SmoothFunction
    constrained: Optional[ConstrainedProblem]
    regularizers: list
    config: ContinuationConfig
    x0: np.ndarray
    feasible_point: Optional[np.ndarray]


def build_problem(doc) -> BuiltProblem:
    """Turn a validated document into a smoothing family plus diagnostics."""
    validate_problem_document(doc)
    n = doc["n"]
    objective_tree = exprdsl.parse(doc["objective"], n)

    def obj_value(x):
        return exprdsl.eval_with_gradient(objective_tree, x)[0]

    def obj_gradient(x):
        return exprdsl.eval_with_gradient(objective_tree, x)[1]

    objective = SmoothFunction(value=obj_value, gradient=obj_gradient, name=doc["name"])

    constraints = doc.get("constraints", [])
    constrained = None
    if constraints:
        h = _expression_map(constraints, n, name="constraints")
        C = convex_set_from_descriptor(doc["set"])
        if C.dim != h.m:
            raise ProblemFileError(
                f"set dimension {C.dim} disagrees with {h.m} constraint rows"
            )
        constrained = ConstrainedProblem(objective=objective, h=h, C=C)
        from .constrained import penalty_family

        family = penalty_family(constrained)
    else:
        family = SmoothingFamily(
            eval=lambda x, mu: float(objective.value(np.asarray(x, dtype=float))),
            grad=lambda x, mu: np.asarray(objective.gradient(np.asarray(x, dtype=float)), dtype=float),
            target=doc["name"],
            monotone_in_mu=True,
            continuously_convergent=True,
            provenance=("smooth objective",),
        )

    regs = [regularizer_family(r, n) for r in doc.get("regularizers", [])]
    for reg in regs:
        family = calculus_sum_continuous(reg, family)

    solver_doc = doc.get("solver", {})
    tols = KKTTolerances()
    if "tol" in solver_doc:
        t = _number(solver_doc["tol"], "solver.tol")
        tols = KKTTolerances(stationarity=t, feasibility=t, cone=t)
    config = ContinuationConfig(
        mu0=_number(solver_doc.get("mu0", 1.0), "solver.mu0"),
        rho=_number(solver_doc.get("rho", 0.5), "solver.rho"),
        k_max=int(solver_doc.get("k_max", 30)),
        inner_tol0=_number(solver_doc.get("inner_tol0", 1e-2), "solver.inner_tol0"),
        inner_max_iter=int(solver_doc.get("inner_max_iter", 10_000)),
        final_tols=tols,
    )
    x0 = (
        _vector(solver_doc["x0"], "solver.x0")
        if "x0" in solver_doc
        else np.zeros(n)
    )
    if x0.size != n:
        raise ProblemFileError("solver.x0 has the wrong dimension")
    feasible_point = (
        _vector(doc["feasible_point"], "feasible_point")
        if "feasible_point" in doc
        else None
    )
    if feasible_point is not None and feasible_point.size != n:
        raise ProblemFileError("feasible_point has the wrong dimension")

    return BuiltProblem(
        name=doc["name"], n=n, family=family, objective=objective,
        constrained=constrained, regularizers=regs, config=config,
        x0=x0, feasible_point=feasible_point,
    )


# ---------------------------------------------------------------------------
# built-in problems
# ---------------------------------------------------------------------------

def _vapnik_regression_doc():
    A = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    c = [0.3, -0.2, 0.55]
    eps = 0.1
    R = A + [[-row[0], -row[1]] for row in A]
    b = [ci + eps for ci in c] + [-ci + eps for ci in c]
    dim_u = len(R)
    return {
        "name": "vapnik_regression_small",
        "n": 2,
        "objective": "0.05*(x1^2 + x2^2)",
        "regularizers": [
            {
                "type": "custom_eplq",
                "weight": 1.0,
                "U": {"type": "box", "lo": [0.0] * dim_u, "hi": [1.0] * dim_u},
                "B": [[0.0] * dim_u for _ in range(dim_u)],
                "R": R,
                "b": b,
            }
        ],
    }


BUILTIN_PROBLEMS = {
    "lasso_small": {
        "name": "lasso_small",
        "n": 3,
        "objective": "0.5*((x1 - 1)^2 + (x2 - 0.2)^2)",
        "regularizers": [{"type": "one_norm", "weight": 0.5}],
    },
    "circle_inequality": {
        "name": "circle_inequality",
        "n": 2,
        "objective": "x1 + x2",
        "constraints": ["x1^2 + x2^2 - 1"],
        "set": {"type": "zero_cross_negative", "s": 0, "m": 1},
        "feasible_point": [0.0, -1.0],
    },
    "infeasible_quadratic": {
        "name": "infeasible_quadratic",
        "n": 1,
        "objective": "x1",
        "constraints": ["x1^2 + 1"],
        "set": {"type": "singleton", "point": [0.0]},
        "solver": {"x0": [0.7]},
    },
    "rosenbrock_box": {
        "name": "rosenbrock_box",
        "n": 2,
        "objective": "(1 - x1)^2 + 100*(x2 - x1^2)^2",
        "constraints": ["x1", "x2"],
        "set": {"type": "box", "lo": [-2.0, -2.0], "hi": [0.8, 2.0]},
        "feasible_point": [0.0, 0.0],
    },
    "vapnik_regression_small": _vapnik_regression_doc(),
}

PROBLEM_DESCRIPTIONS = {
    "lasso_small": (
        "sparse least squares through the soft-thresholding envelope; "
        "exercises the smoothing calculus and continuation to a nonsmooth optimum"
    ),
    "circle_inequality": (
        "linear objective over a disk; exercises penalty continuation, "
        "multiplier recovery, and KKT classification"
    ),
    "infeasible_quadratic": (
        "unsatisfiable equality constraint; exercises infeasible-stationarity "
        "detection and the extended qualification test"
    ),
    "rosenbrock_box": (
        "nonconvex objective boxed away from its free minimizer; exercises box "
        "projections, normal-cone residuals, and multiplier signs"
    ),
    "vapnik_regression_small": (
        "epsilon-insensitive regression with a ridge term via a custom "
        "piecewise linear-quadratic penalty; exercises closed-form envelopes"
    ),
}


def builtin_problem(name) -> dict:
    if name not in BUILTIN_PROBLEMS:
        raise KeyError(f"unknown built-in problem {name!r}")
    return json.loads(json.dumps(BUILTIN_PROBLEMS[name]))


# ---------------------------------------------------------------------------
# prox catalog (for the command-line prox query)
# ---------------------------------------------------------------------------

def prox_oracle(function, dim, weight=1.0, kappa=1.0, epsilon=0.5, lo=None, hi=None):
    """Named convex functions available to prox/envelope queries."""
    if function == "one_norm":
        return cc.one_norm_oracle(dim, weight=weight)
    if function == "euclidean_norm":
        return cc.euclidean_norm_oracle(dim)
    if function == "huber":
        return cc.huber_oracle(dim, kappa=kappa)
    if function == "vapnik":
        return cc.vapnik_oracle(dim, epsilon=epsilon)
    if function == "box_indicator":
        lo = np.zeros(dim) if lo is None else np.asarray(lo, dtype=float)
        hi = np.ones(dim) if hi is None else np.asarray(hi, dtype=float)
        return cc.indicator_oracle(cc.box(lo, hi))
    raise KeyError(f"unknown prox function {function!r}")


PROX_FUNCTIONS = ("one_norm", "euclidean_norm", "huber", "vapnik", "box_indicator")
