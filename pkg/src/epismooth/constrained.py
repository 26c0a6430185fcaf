"""Quadratic-penalty smoothing for constrained problems.

The constrained problem is: minimize phi(x) subject to h(x) in C with smooth
phi, smooth h, and a projectable closed convex set C.  The penalty family

    s(x, mu) = phi(x) + dist^2(h(x) | C) / (2 mu)

is the classical smoothing of the equivalent composite formulation; its
gradient exposes the running multiplier estimate y = (h(x) - proj_C(h(x))) / mu.
The checks in this module classify terminal iterates: KKT residuals at
(approximately) feasible points, stationarity of the constraint-violation
measure at infeasible ones, and the extended constraint qualification that
separates the two regimes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .convex_core import (
    Array,
    ConvexSet,
    cone_distance,
    dist_sq_half_gradient,
    distance,
    normal_cone,
    project,
    _vec,
)
from .composite import SmoothMap, qualification_residual
from .smoothing import SmoothFunction, SmoothingFamily

CLASS_KKT = "kkt_point"
CLASS_INFEASIBLE = "infeasible_stationary"
CLASS_UNDETERMINED = "undetermined"


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    """Objective oracle, constraint map, and constraint set of one problem."""

    objective: SmoothFunction
    h: SmoothMap
    C: ConvexSet

    def __post_init__(self):
        if self.h.m != self.C.dim:
            raise ValueError("constraint map range and set dimension disagree")


@dataclass(frozen=True)
class KKTTolerances:
    stationarity: float = 1e-6
    feasibility: float = 1e-6
    cone: float = 1e-6


@dataclass(frozen=True)
class KKTReport:
    stationarity_residual: float
    feasibility_residual: float
    cone_residual: float
    classification: str


@dataclass(frozen=True)
class InfeasibleStationarityReport:
    is_candidate: bool
    psi: float
    residual: float


@dataclass(frozen=True)
class ECQReport:
    holds: bool
    residual: float


def penalty_family(p: ConstrainedProblem) -> SmoothingFamily:
    """The penalty smoothing family phi + dist^2(h(.) | C) / (2 mu)."""

    def ev(x, mu):
        x = _vec(x)
        if mu <= 0:
            raise ValueError("mu must be positive")
        return float(p.objective.value(x)) + distance(p.C, p.h.value(x)) ** 2 / (2.0 * mu)

    def gr(x, mu):
        x = _vec(x)
        if mu <= 0:
            raise ValueError("mu must be positive")
        residual = dist_sq_half_gradient(p.C, p.h.value(x))
        jac = np.asarray(p.h.jacobian(x), dtype=float)
        return np.asarray(p.objective.gradient(x), dtype=float) + jac.T @ (residual / mu)

    name = p.objective.name or "phi"
    return SmoothingFamily(
        eval=ev,
        grad=gr,
        target=f"{name} + indicator({p.C.kind} constraint)",
        monotone_in_mu=True,
        continuously_convergent=False,
        provenance=("penalty(quadratic kernel)",),
    )


def multiplier_estimate(p: ConstrainedProblem, x, mu) -> Array:
    """Running multiplier y = (h(x) - proj_C(h(x))) / mu; it always lies in
    the normal cone of C at the projected point."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    x = _vec(x)
    return dist_sq_half_gradient(p.C, p.h.value(x)) / mu


def kkt_report(p: ConstrainedProblem, x, y, tolerances: KKTTolerances = KKTTolerances()) -> KKTReport:
    """Residuals of the KKT system at (x, y) and the resulting classification.

    Stationarity is ||grad phi + h' y||, feasibility is dist(h(x) | C), and
    the cone residual is the distance of y to the normal cone of C at the
    projection of h(x).  A point failing feasibility is classified
    infeasible-stationary when the scaled constraint-violation gradient
    vanishes; otherwise the outcome is undetermined.
    """
    x = _vec(x)
    y = _vec(y, "y")
    hx = p.h.value(x)
    jac = np.asarray(p.h.jacobian(x), dtype=float)
    stationarity = float(np.linalg.norm(
        np.asarray(p.objective.gradient(x), dtype=float) + jac.T @ y
    ))
    feasibility = distance(p.C, hx)
    rays = normal_cone(p.C, project(p.C, hx), tol=max(tolerances.feasibility, 1e-9)).rays
    cone_res = cone_distance(rays, y)

    if (
        stationarity <= tolerances.stationarity
        and feasibility <= tolerances.feasibility
        and cone_res <= tolerances.cone
    ):
        classification = CLASS_KKT
    elif feasibility > tolerances.feasibility:
        infeas = infeasible_stationarity_check(p, x, tol=tolerances.feasibility)
        classification = CLASS_INFEASIBLE if infeas.is_candidate else CLASS_UNDETERMINED
    else:
        classification = CLASS_UNDETERMINED
    return KKTReport(
        stationarity_residual=stationarity,
        feasibility_residual=feasibility,
        cone_residual=float(cone_res),
        classification=classification,
    )


def infeasible_stationarity_check(p: ConstrainedProblem, x, tol=1e-6) -> InfeasibleStationarityReport:
    """Stationarity test for the constraint violation psi = dist(h(.) | C) at
    a strictly infeasible point.

    At such points psi has the single subgradient
    h'(x)' (h(x) - proj) / dist, so the candidate condition is that its norm
    falls to tol or below.
    """
    x = _vec(x)
    hx = p.h.value(x)
    psi = distance(p.C, hx)
    if psi <= tol:
        raise ValueError("point is feasible within tol; use kkt_report instead")
    residual_vec = dist_sq_half_gradient(p.C, hx)
    jac = np.asarray(p.h.jacobian(x), dtype=float)
    residual = float(np.linalg.norm(jac.T @ residual_vec)) / psi
    return InfeasibleStationarityReport(is_candidate=residual <= tol, psi=psi, residual=residual)


def ecq_check(p: ConstrainedProblem, x, tol=1e-8) -> ECQReport:
    """Extended constraint qualification, well defined at every point.

    At feasible points it is the constraint qualification on the rays of
    the normal cone of C at h(x); at infeasible points the inflated-set
    normal cone is the single residual ray, so the condition reduces to the
    scaled violation gradient staying away from zero.
    """
    x = _vec(x)
    hx = p.h.value(x)
    jac_T = np.asarray(p.h.jacobian(x), dtype=float).T
    if distance(p.C, hx) <= tol:
        rays = normal_cone(p.C, project(p.C, hx), tol=max(tol, 1e-9)).rays
        if rays.shape[0] == 0:
            return ECQReport(holds=True, residual=np.inf)
        residual, _ = qualification_residual(jac_T, rays, tol=tol)
        return ECQReport(holds=residual > tol, residual=residual)
    report = infeasible_stationarity_check(p, x, tol=tol)
    return ECQReport(holds=report.residual > tol, residual=report.residual)


def feasible_guard(p: ConstrainedProblem, x_tilde, x, mu, feas_tol=1e-9) -> bool:
    """Accept a candidate x at parameter mu against a known feasible point.

    The anchor must be feasible (within feas_tol); acceptance means the
    penalty value at x does not exceed the plain objective at the anchor,
    which forces cluster points of accepted iterates to be feasible.
    """
    x_tilde = _vec(x_tilde, "x_tilde")
    if distance(p.C, p.h.value(x_tilde)) > feas_tol:
        raise ValueError("guard point is not feasible within feas_tol")
    fam = penalty_family(p)
    return fam.eval(x, mu) <= float(p.objective.value(x_tilde))
