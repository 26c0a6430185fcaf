"""Continuation minimization of a smoothing family.

For a decreasing grid mu_k = mu0 * rho^k, each stage minimizes
s(., mu_k) by a first-order method (gradient descent with Armijo
backtracking and Barzilai-Borwein initial steps) to a matching tolerance
eps_k = eps0 * rho^k, warm-starting from the previous stage.  With a
constrained problem attached, every stage records the running multiplier
estimate, the terminal iterate is classified through its KKT residuals, and
an optional known feasible point guards iterates against converging to
infeasible stationary points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constrained import (
    CLASS_KKT,
    ConstrainedProblem,
    KKTReport,
    KKTTolerances,
    kkt_report,
    multiplier_estimate,
    feasible_guard,
)
from .errors import ConvergenceError
from .smoothing import SmoothingFamily

_DIVERGENCE_NORM = 1e8

STATUS_COMPLETED = "completed"
STATUS_INNER_FAILURE = "inner_failure"
STATUS_DIVERGED = "diverged"


@dataclass
class ContinuationConfig:
    """Schedule and tolerances of a continuation run."""

    mu0: float = 1.0
    rho: float = 0.5
    k_max: int = 30
    inner_tol0: float = 1e-2
    inner_max_iter: int = 10_000
    final_tols: KKTTolerances = field(default_factory=KKTTolerances)
    guard: Optional[np.ndarray] = None
    warm_start: bool = True

    def __post_init__(self):
        if self.mu0 <= 0 or not (0 < self.rho < 1):
            raise ValueError("need mu0 > 0 and rho in (0, 1)")
        if self.k_max < 1 or self.inner_tol0 <= 0 or self.inner_max_iter < 1:
            raise ValueError("schedule parameters must be positive")


@dataclass(frozen=True)
class StageRecord:
    k: int
    mu: float
    x: np.ndarray
    grad_norm: float
    value: float
    inner_iterations: int
    inner_converged: bool
    multiplier: Optional[np.ndarray] = None
    guard_accepted: Optional[bool] = None


@dataclass
class SolverTrace:
    stages: list = field(default_factory=list)


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    grad_norm: float
    mu: float
    trace: SolverTrace
    status: str
    kkt: Optional[KKTReport] = None


def minimize_smooth(value_and_grad: Callable, x0, tol, max_iter):
    """Gradient descent with Armijo backtracking and Barzilai-Borwein steps.

    Stops when the gradient norm reaches tol and returns (x, iterations).
    Exhausting max_iter, or stalling because no descent step of representable
    size exists, raises ConvergenceError carrying the best iterate seen.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = value_and_grad(x)
    gnorm = float(np.linalg.norm(g))
    best_x, best_gnorm = x.copy(), gnorm
    step = 1.0 / max(1.0, gnorm)
    armijo = 1e-4

    for it in range(max_iter):
        if gnorm <= tol:
            return x, it
        trial = step
        accepted = False
        for _ in range(60):
            x_new = x - trial * g
            f_new, g_new = value_and_grad(x_new)
            if f_new <= f - armijo * trial * gnorm * gnorm:
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            raise ConvergenceError(
                "line search stalled (no representable descent step)",
                best=best_x, residual=best_gnorm, iterations=it,
            )
        if not np.isfinite(f_new) or np.linalg.norm(x_new) > 1e10:
            raise ConvergenceError(
                "iterates diverged", best=x_new, residual=gnorm, iterations=it,
            )
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-300:
            step = float(s @ s) / sy
            step = float(np.clip(step, 1e-14, 1e14))
        else:
            step = max(trial * 2.0, 1e-14)
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
        if gnorm < best_gnorm:
            best_x, best_gnorm = x.copy(), gnorm
    if gnorm <= tol:
        return x, max_iter
    raise ConvergenceError(
        "gradient descent reached its iteration cap",
        best=best_x, residual=best_gnorm, iterations=max_iter,
    )


def continuation_solve(
    family: SmoothingFamily,
    config: ContinuationConfig,
    x0,
    diagnostics: Optional[ConstrainedProblem] = None,
) -> SolveResult:
    """Drive the smoothing parameter down, minimizing each stage in turn.

    With `diagnostics` attached the stages record multiplier estimates, the
    run stops early once the final KKT tolerances are met, and the result
    carries the terminal classification.  An inner failure truncates the
    trace (the stage still records the best iterate); iterates beyond norm
    1e8 abort the run with a diverged status.
    """
    x = np.asarray(x0, dtype=float).copy()
    trace = SolverTrace()
    status = STATUS_COMPLETED
    kkt: Optional[KKTReport] = None
    mu = config.mu0
    guard_value = None
    if config.guard is not None:
        if diagnostics is None:
            raise ValueError("a guard point requires the constrained problem")
        guard_value = float(diagnostics.objective.value(np.asarray(config.guard, dtype=float)))
        # Validates feasibility of the guard point.
        feasible_guard(diagnostics, config.guard, x, config.mu0)

    for k in range(config.k_max):
        mu = config.mu0 * config.rho**k
        eps_k = config.inner_tol0 * config.rho**k
        start = x if config.warm_start else np.asarray(x0, dtype=float).copy()
        oracle = lambda z, _mu=mu: (family.eval(z, _mu), family.grad(z, _mu))
        converged = True
        try:
            x_new, iters = minimize_smooth(oracle, start, eps_k, config.inner_max_iter)
        except ConvergenceError as err:
            x_new, iters, converged = err.best, err.iterations or 0, False

        guard_accepted = None
        if guard_value is not None:
            guard_accepted = family.eval(x_new, mu) <= guard_value
            if not guard_accepted:
                # Restart from the guard point: monotone descent keeps the
                # penalty value at or below the guard objective.
                try:
                    x_new, more = minimize_smooth(
                        oracle, np.asarray(config.guard, dtype=float), eps_k,
                        config.inner_max_iter,
                    )
                    iters += more
                except ConvergenceError as err:
                    x_new, converged = err.best, False
                    iters += err.iterations or 0
                guard_accepted = family.eval(x_new, mu) <= guard_value

        grad_norm = float(np.linalg.norm(family.grad(x_new, mu)))
        value = family.eval(x_new, mu)
        multiplier = (
            multiplier_estimate(diagnostics, x_new, mu) if diagnostics is not None else None
        )
        trace.stages.append(
            StageRecord(
                k=k, mu=mu, x=x_new.copy(), grad_norm=grad_norm, value=value,
                inner_iterations=iters, inner_converged=converged,
                multiplier=multiplier, guard_accepted=guard_accepted,
            )
        )
        x = x_new
        if float(np.linalg.norm(x)) > _DIVERGENCE_NORM:
            status = STATUS_DIVERGED
            break
        if not converged:
            status = STATUS_INNER_FAILURE
            break
        if diagnostics is not None:
            kkt = kkt_report(diagnostics, x, multiplier, config.final_tols)
            if kkt.classification == CLASS_KKT:
                break

    if diagnostics is not None and kkt is None and trace.stages:
        last = trace.stages[-1]
        kkt = kkt_report(diagnostics, last.x, last.multiplier, config.final_tols)

    last = trace.stages[-1] if trace.stages else None
    return SolveResult(
        x=x,
        value=last.value if last else family.eval(x, mu),
        grad_norm=last.grad_norm if last else float(np.linalg.norm(family.grad(x, mu))),
        mu=mu,
        trace=trace,
        status=status,
        kkt=kkt,
    )
