"""Convex-composite functions f = g(H(x)) and their smoothing.

H is a smooth map with a Jacobian oracle and g a convex oracle; chaining a
smoothing family for g through H gives a family for the composition whose
gradient is H'(x)' times the smoothed gradient of g.  The basic constraint
qualification (the normal cone of dom g at H(x) meets the null space of
H'(x)' only at zero) is decided numerically from finite ray generators, and
it gates the chain-rule subdifferential.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .convex_core import (
    Array,
    ConvexFunctionOracle,
    ConvexPolytope,
    cone_distance,
    contains,
    normal_cone,
    polytope,
    simplex_min_norm,
    _vec,
)
from .errors import UnsupportedOperationError
from .smoothing import SmoothingFamily


@dataclass(frozen=True, eq=False)
class SmoothMap:
    """A smooth map R^n -> R^m with value and Jacobian callables."""

    value: Callable[[Array], Array]
    jacobian: Callable[[Array], Array]
    n: int
    m: int
    name: str = ""


@dataclass(frozen=True, eq=False)
class CompositeProblem:
    """The data of f = g(H(.)) plus a smoothing family for g."""

    g: ConvexFunctionOracle
    H: SmoothMap
    family_g: SmoothingFamily


@dataclass(frozen=True)
class BCQReport:
    holds: bool
    residual: float
    witness: Optional[Array] = None


def composite_family(p: CompositeProblem, assert_monotone=False) -> SmoothingFamily:
    """Chain the family for g through H: s(x, mu) = family_g(H(x), mu).

    Epi-convergence of the chained family rests on the family for g being
    nondecreasing as mu decreases; a family without that flag is accepted
    only with `assert_monotone=True`.
    """
    fam = p.family_g
    if not fam.monotone_in_mu and not assert_monotone:
        raise ValueError(
            "family for g is not monotone in mu; pass assert_monotone=True to override"
        )
    H = p.H

    def ev(x, mu):
        return fam.eval(H.value(np.asarray(x, dtype=float)), mu)

    def gr(x, mu):
        x = np.asarray(x, dtype=float)
        return np.asarray(H.jacobian(x), dtype=float).T @ fam.grad(H.value(x), mu)

    notes = () if fam.monotone_in_mu else ("monotonicity asserted by caller",)
    return SmoothingFamily(
        eval=ev,
        grad=gr,
        target=f"{fam.target} o {H.name or 'H'}",
        monotone_in_mu=fam.monotone_in_mu,
        continuously_convergent=fam.continuously_convergent,
        provenance=fam.provenance + (f"composite({H.name or 'H'})",) + notes,
    )


def qualification_residual(jac_T: Array, rays: Array, tol=1e-8):
    """Smallest achievable ||J' v|| over unit-scale v in the cone of `rays`.

    The cone is split into its lineality space (spanned by generators whose
    negation stays in the cone) and a pointed remainder.  On the lineality
    space the residual is a smallest singular value; on the pointed part,
    where simplex weights cannot cancel, it is the Frank-Wolfe simplex
    minimum after projecting out directions reachable through the lineality
    space.  Returns (residual, witness) with a nonzero cone vector as witness
    when the residual is tol or below.
    """
    jac_T = np.atleast_2d(np.asarray(jac_T, dtype=float))
    rays = np.asarray(rays, dtype=float)
    if rays.size == 0:
        return np.inf, None
    norms = np.linalg.norm(rays, axis=1)
    rays = rays[norms > 0] / norms[norms > 0, None]
    if rays.shape[0] == 0:
        return np.inf, None

    lineal = np.array(
        [cone_distance(rays, -r) <= 1e-9 for r in rays], dtype=bool
    )
    residual = np.inf
    witness = None

    lin_basis = np.zeros((rays.shape[1], 0))
    if lineal.any():
        u_svd, s_svd, _ = np.linalg.svd(rays[lineal].T, full_matrices=False)
        lin_basis = u_svd[:, s_svd > 1e-12 * max(1.0, s_svd.max())]
        mapped = jac_T @ lin_basis
        u2, s2, vt2 = np.linalg.svd(mapped, full_matrices=False)
        s_min = s2.min() if s2.size else 0.0
        if s_min < residual:
            residual = float(s_min)
            witness = lin_basis @ vt2[-1] if s2.size else lin_basis[:, 0]

    pointed = rays[~lineal]
    if pointed.shape[0]:
        proj = pointed - (pointed @ lin_basis) @ lin_basis.T
        keep = np.linalg.norm(proj, axis=1) > 1e-12
        proj = proj[keep]
        if proj.shape[0]:
            proj = proj / np.linalg.norm(proj, axis=1)[:, None]
            G = jac_T @ proj.T
            if lin_basis.shape[1]:
                mapped = jac_T @ lin_basis
                uw, sw, _ = np.linalg.svd(mapped, full_matrices=False)
                w_basis = uw[:, sw > 1e-12 * max(1.0, sw.max(initial=0.0))]
                G = G - w_basis @ (w_basis.T @ G)
            lam, res = simplex_min_norm(G, tol=min(tol, 1e-9))
            if res < residual:
                residual = float(res)
                v = lam @ proj
                if lin_basis.shape[1]:
                    corr, *_ = np.linalg.lstsq(jac_T @ lin_basis, -(jac_T @ v), rcond=None)
                    v = v + lin_basis @ corr
                witness = v
    if residual > tol:
        witness = None
    return residual, witness


def bcq_check(p: CompositeProblem, x_bar, tol=1e-8) -> BCQReport:
    """Decide the basic constraint qualification at x_bar.

    Requires H(x_bar) in dom g (within tol).  An empty ray set (interior
    point, or finite-valued g) passes trivially; otherwise the qualification
    holds exactly when the residual of `qualification_residual` exceeds tol.
    """
    x_bar = _vec(x_bar, "x_bar")
    y = p.H.value(x_bar)
    if not contains(p.g.domain, y, tol=tol):
        raise ValueError("H(x_bar) is not in the domain of g")
    rays = normal_cone(p.g.domain, y, tol=max(tol, 1e-9)).rays
    if rays.shape[0] == 0:
        return BCQReport(holds=True, residual=np.inf, witness=None)
    jac_T = np.asarray(p.H.jacobian(x_bar), dtype=float).T
    residual, witness = qualification_residual(jac_T, rays, tol=tol)
    return BCQReport(holds=residual > tol, residual=residual, witness=witness)


def composite_subdifferential(p: CompositeProblem, x_bar, tol=1e-8) -> ConvexPolytope:
    """Chain-rule subdifferential H'(x_bar)' applied to the generators of
    the subdifferential of g at H(x_bar); only justified under the BCQ."""
    x_bar = _vec(x_bar, "x_bar")
    report = bcq_check(p, x_bar, tol=tol)
    if not report.holds:
        raise UnsupportedOperationError(
            "constraint qualification fails at x_bar; the chain rule is not justified"
        )
    if p.g.subdiff is None:
        raise UnsupportedOperationError("g has no subdifferential oracle")
    y = p.H.value(x_bar)
    sub = p.g.subdiff(y)
    jac_T = np.asarray(p.H.jacobian(x_bar), dtype=float).T
    gens = (
        np.array([jac_T @ v for v in sub.generators])
        if sub.generators.size
        else None
    )
    rays = np.array([jac_T @ v for v in sub.rays]) if sub.rays.size else None
    return polytope(generators=gens, rays=rays, dim=p.H.n)
