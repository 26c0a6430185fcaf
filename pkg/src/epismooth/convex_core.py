"""Projectable convex sets, normal cones, and piecewise linear-quadratic
penalties.

This is the geometric base layer of the package: closed convex sets with
exact projections and finitely generated normal cones, convex-function
oracles (value / prox / subdifferential), the extended piecewise
linear-quadratic (EPLQ) family evaluated through a box- or ball-constrained
concave QP, and the Frank-Wolfe simplex solver used by the
constraint-qualification checks.

All operations are pure functions of their inputs; nothing here keeps state.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, UnboundedObjectiveError, UnsupportedOperationError

Array = np.ndarray

_SET_KINDS = (
    "box",
    "euclidean_ball",
    "zero_cross_negative",
    "affine_subspace",
    "singleton",
    "nonneg_orthant",
    "whole_space",
)

# Free coordinates beyond this make vertex enumeration intractable.
_MAX_ENUM_COORDS = 20


# ---------------------------------------------------------------------------
# Convex sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConvexSet:
    """A closed convex subset of R^m of one of the supported kinds.

    Instances are built through the module-level constructors (`box`,
    `euclidean_ball`, ...) which validate their parameters; the geometry is
    exposed through `project`, `distance`, `normal_cone` and friends.
    """

    kind: str
    dim: int
    lo: Optional[Array] = None
    hi: Optional[Array] = None
    center: Optional[Array] = None
    radius: Optional[float] = None
    s: Optional[int] = None
    A: Optional[Array] = None
    c: Optional[Array] = None
    point: Optional[Array] = None

    def __repr__(self):  # keep reprs short; arrays can be large
        return f"ConvexSet(kind={self.kind!r}, dim={self.dim})"


def _vec(x, name="vector") -> Array:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    return v


def box(lo, hi) -> ConvexSet:
    """Axis-aligned box {y : lo <= y <= hi}; infinite bounds are allowed."""
    lo, hi = _vec(lo, "lo"), _vec(hi, "hi")
    if lo.shape != hi.shape:
        raise ValueError("lo and hi must have the same length")
    if np.any(lo > hi):
        raise ValueError("box requires lo <= hi componentwise")
    return ConvexSet(kind="box", dim=lo.size, lo=lo, hi=hi)


def euclidean_ball(center, radius) -> ConvexSet:
    center = _vec(center, "center")
    radius = float(radius)
    if radius < 0:
        raise ValueError("ball radius must be nonnegative")
    return ConvexSet(kind="euclidean_ball", dim=center.size, center=center, radius=radius)


def zero_cross_negative(s, m) -> ConvexSet:
    """The set {0}^s x R_-^(m-s): s equality coordinates, then nonpositive ones."""
    s, m = int(s), int(m)
    if not 0 <= s <= m or m < 1:
        raise ValueError("need 0 <= s <= m and m >= 1")
    return ConvexSet(kind="zero_cross_negative", dim=m, s=s)


def affine_subspace(A, c) -> ConvexSet:
    """The affine subspace {y : A y = c}; A must have full row rank."""
    A = np.asarray(A, dtype=float)
    c = _vec(c, "c")
    if A.ndim != 2 or A.shape[0] != c.size:
        raise ValueError("A must be a matrix with one row per entry of c")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size == 0 or sv.min() <= 1e-10 * max(1.0, sv.max()):
        raise ValueError("affine_subspace requires A with full row rank")
    return ConvexSet(kind="affine_subspace", dim=A.shape[1], A=A, c=c)


def singleton(point) -> ConvexSet:
    point = _vec(point, "point")
    return ConvexSet(kind="singleton", dim=point.size, point=point)


def nonneg_orthant(m) -> ConvexSet:
    return ConvexSet(kind="nonneg_orthant", dim=int(m))


def whole_space(m) -> ConvexSet:
    return ConvexSet(kind="whole_space", dim=int(m))


def _check_member_dim(set_: ConvexSet, y) -> Array:
    y = _vec(y)
    if y.size != set_.dim:
        raise ValueError(f"point has dimension {y.size}, set has dimension {set_.dim}")
    return y


def project(set_: ConvexSet, y) -> Array:
    """Euclidean projection of y onto the set (idempotent, nonexpansive)."""
    y = _check_member_dim(set_, y)
    if set_.kind == "box":
        return np.clip(y, set_.lo, set_.hi)
    if set_.kind == "euclidean_ball":
        d = y - set_.center
        nrm = np.linalg.norm(d)
        if nrm <= set_.radius:
            return y.copy()
        return set_.center + d * (set_.radius / nrm)
    if set_.kind == "zero_cross_negative":
        out = np.minimum(y, 0.0)
        out[: set_.s] = 0.0
        return out
    if set_.kind == "affine_subspace":
        A, c = set_.A, set_.c
        resid = A @ y - c
        return y - A.T @ np.linalg.solve(A @ A.T, resid)
    if set_.kind == "singleton":
        return set_.point.copy()
    if set_.kind == "nonneg_orthant":
        return np.maximum(y, 0.0)
    if set_.kind == "whole_space":
        return y.copy()
    raise ValueError(f"unknown set kind {set_.kind!r}")


def distance(set_: ConvexSet, y) -> float:
    """Euclidean distance from y to the set."""
    y = _check_member_dim(set_, y)
    return float(np.linalg.norm(y - project(set_, y)))


def dist_sq_half_gradient(set_: ConvexSet, y) -> Array:
    """Gradient of (1/2) dist^2(. | set) at y, which equals y - project(set, y)."""
    y = _check_member_dim(set_, y)
    return y - project(set_, y)


def contains(set_: ConvexSet, y, tol=1e-9) -> bool:
    return distance(set_, y) <= tol


def sample_point(set_: ConvexSet, rng: np.random.Generator, scale=1.0) -> Array:
    """Draw a point of the set (used by probes and tests; not uniform)."""
    m = set_.dim
    if set_.kind == "box":
        lo = np.where(np.isfinite(set_.lo), set_.lo, -10.0 * scale)
        hi = np.where(np.isfinite(set_.hi), set_.hi, 10.0 * scale)
        return lo + rng.random(m) * (hi - lo)
    if set_.kind == "euclidean_ball":
        u = rng.standard_normal(m)
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            return set_.center.copy()
        r = set_.radius * rng.random() ** (1.0 / max(m, 1))
        return set_.center + u * (r / nrm)
    if set_.kind == "zero_cross_negative":
        out = -np.abs(rng.standard_normal(m)) * scale
        out[: set_.s] = 0.0
        return out
    if set_.kind == "affine_subspace":
        y0 = project(set_, np.zeros(m))
        step = rng.standard_normal(m) * scale
        return project(set_, y0 + step)
    if set_.kind == "singleton":
        return set_.point.copy()
    if set_.kind == "nonneg_orthant":
        return np.abs(rng.standard_normal(m)) * scale
    if set_.kind == "whole_space":
        return rng.standard_normal(m) * scale
    raise ValueError(f"unknown set kind {set_.kind!r}")


# ---------------------------------------------------------------------------
# Finitely generated convex polytopes (hull + cone)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConvexPolytope:
    """conv(generators) + cone(rays).

    With an empty generator list the hull part is the origin, so an empty
    polytope denotes {0} and a ray-only polytope denotes the cone itself.
    """

    generators: Array  # shape (k, d)
    rays: Array        # shape (r, d)

    @property
    def dim(self) -> int:
        return self.generators.shape[1] if self.generators.size else self.rays.shape[1]


def polytope(generators=None, rays=None, dim=None) -> ConvexPolytope:
    if generators is None and rays is None and dim is None:
        raise ValueError("need generators, rays, or an explicit dimension")
    gen = np.asarray(generators, dtype=float) if generators is not None else None
    ray = np.asarray(rays, dtype=float) if rays is not None else None
    if gen is not None and gen.size and gen.ndim != 2:
        gen = np.atleast_2d(gen)
    if ray is not None and ray.size and ray.ndim != 2:
        ray = np.atleast_2d(ray)
    if dim is None:
        dim = gen.shape[1] if gen is not None and gen.size else ray.shape[1]
    if gen is None or gen.size == 0:
        gen = np.zeros((0, dim))
    if ray is None or ray.size == 0:
        ray = np.zeros((0, dim))
    if gen.shape[1] != dim or ray.shape[1] != dim:
        raise ValueError("generator/ray dimensions disagree")
    return ConvexPolytope(generators=gen, rays=ray)


def _interval_distance(lo, hi, v) -> float:
    if v < lo:
        return lo - v
    if v > hi:
        return v - hi
    return 0.0


def polytope_distance(poly: ConvexPolytope, v, tol=1e-12, max_iter=200_000) -> float:
    """Distance from v to conv(generators) + cone(rays).

    One-dimensional polytopes are handled in closed form.  Pure hulls go
    through the Frank-Wolfe simplex routine; when rays are present a
    projected-gradient pass over (simplex weights, nonnegative ray weights)
    is used instead.
    """
    v = _vec(v)
    d = poly.dim
    if v.size != d:
        raise ValueError("point and polytope dimensions disagree")
    gens = poly.generators if poly.generators.size else np.zeros((1, d))
    rays = poly.rays

    if d == 1:
        lo, hi = float(gens.min()), float(gens.max())
        for r in rays[:, 0]:
            if r > 0:
                hi = np.inf
            elif r < 0:
                lo = -np.inf
        return _interval_distance(lo, hi, float(v[0]))

    if rays.size == 0:
        shifted = gens.T - v[:, None]
        _, resid = simplex_min_norm(shifted, tol=tol, max_iter=max_iter)
        return resid

    M = gens.T                      # d x k
    R = rays.T                      # d x r
    k, r = M.shape[1], R.shape[1]
    full = np.hstack([M, R])
    lip = max(_power_iteration(full.T @ full), 1e-12)
    lam = np.full(k, 1.0 / k)
    beta = np.zeros(r)
    step = 1.0 / lip
    scale = 1.0 + np.linalg.norm(v)
    for _ in range(max_iter):
        z = M @ lam + R @ beta - v
        lam_new = _project_simplex(lam - step * (M.T @ z))
        beta_new = np.maximum(beta - step * (R.T @ z), 0.0)
        move = np.sqrt(np.sum((lam_new - lam) ** 2) + np.sum((beta_new - beta) ** 2))
        lam, beta = lam_new, beta_new
        if move / step <= tol * scale:
            break
    else:
        raise ConvergenceError(
            "polytope distance did not converge",
            best=float(np.linalg.norm(M @ lam + R @ beta - v)),
        )
    return float(np.linalg.norm(M @ lam + R @ beta - v))


def cone_distance(rays: Array, v, tol=1e-12, max_iter=200_000) -> float:
    """Distance from v to the cone generated by the rows of `rays`."""
    rays = np.asarray(rays, dtype=float)
    v = _vec(v)
    if rays.size == 0:
        return float(np.linalg.norm(v))
    return polytope_distance(polytope(rays=rays, dim=v.size), v, tol=tol, max_iter=max_iter)


def _project_simplex(v: Array) -> Array:
    # Euclidean projection onto {w >= 0, sum w = 1} by the sort-based rule.
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    cond = u - (css - 1.0) / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - theta, 0.0)


# ---------------------------------------------------------------------------
# Normal cones
# ---------------------------------------------------------------------------

def _all_signed_axes(m) -> Array:
    eye = np.eye(m)
    return np.vstack([eye, -eye])


def normal_cone(set_: ConvexSet, y, tol=1e-8) -> ConvexPolytope:
    """Finite ray generators of the normal cone at project(set, y).

    Requires y within `tol` of the set; `tol` also controls which faces
    count as active (over-approximating near-active faces is deliberate).
    """
    y = _check_member_dim(set_, y)
    if distance(set_, y) > tol:
        raise ValueError("normal_cone requires a point within tol of the set")
    p = project(set_, y)
    m = set_.dim

    rays = []
    if set_.kind == "box":
        for i in range(m):
            lo_i, hi_i = set_.lo[i], set_.hi[i]
            at_hi = np.isfinite(hi_i) and p[i] >= hi_i - tol
            at_lo = np.isfinite(lo_i) and p[i] <= lo_i + tol
            if at_hi:
                e = np.zeros(m)
                e[i] = 1.0
                rays.append(e)
            if at_lo:
                e = np.zeros(m)
                e[i] = -1.0
                rays.append(e)
    elif set_.kind == "euclidean_ball":
        if set_.radius <= tol:
            return polytope(rays=_all_signed_axes(m), dim=m)
        d = p - set_.center
        nrm = np.linalg.norm(d)
        if nrm >= set_.radius - tol * max(1.0, set_.radius):
            rays.append(d / nrm)
    elif set_.kind == "zero_cross_negative":
        for i in range(m):
            e = np.zeros(m)
            e[i] = 1.0
            if i < set_.s:
                rays.extend([e, -e])
            elif p[i] >= -tol:
                rays.append(e)
    elif set_.kind == "affine_subspace":
        for row in set_.A:
            r = row / np.linalg.norm(row)
            rays.extend([r, -r])
    elif set_.kind == "singleton":
        return polytope(rays=_all_signed_axes(m), dim=m)
    elif set_.kind == "nonneg_orthant":
        for i in range(m):
            if p[i] <= tol:
                e = np.zeros(m)
                e[i] = -1.0
                rays.append(e)
    elif set_.kind == "whole_space":
        pass
    else:
        raise ValueError(f"unknown set kind {set_.kind!r}")
    return polytope(rays=np.asarray(rays) if rays else None, dim=m)


# ---------------------------------------------------------------------------
# Inner solvers: box/ball concave QP and the simplex min-norm problem
# ---------------------------------------------------------------------------

def _power_iteration(B: Array, iters=50) -> float:
    """Largest-eigenvalue estimate of a symmetric psd matrix."""
    m = B.shape[0]
    if m == 0 or not np.any(B):
        return 0.0
    v = np.random.default_rng(12345).standard_normal(m)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = B @ v
        lam = np.linalg.norm(w)
        if lam < 1e-300:
            return 0.0
        v = w / lam
    return float(lam)


def _linear_max_over_set(c: Array, U: ConvexSet):
    # Exact maximizer of <c, u> over a box or ball; raises if unbounded.
    if U.kind == "box":
        u = np.empty(U.dim)
        for i, ci in enumerate(c):
            if ci > 0:
                if not np.isfinite(U.hi[i]):
                    raise UnboundedObjectiveError("linear objective unbounded over box")
                u[i] = U.hi[i]
            elif ci < 0:
                if not np.isfinite(U.lo[i]):
                    raise UnboundedObjectiveError("linear objective unbounded over box")
                u[i] = U.lo[i]
            else:
                u[i] = min(max(0.0, U.lo[i]), U.hi[i])
        return u, float(c @ u)
    if U.kind == "euclidean_ball":
        nrm = np.linalg.norm(c)
        u = U.center.copy() if nrm == 0.0 else U.center + c * (U.radius / nrm)
        return u, float(c @ u)
    raise UnsupportedOperationError(f"unsupported constraint set kind {U.kind!r}")


def box_qp_maximize(Bhat, c, U: ConvexSet, tol=1e-9, max_iter=50_000):
    """Maximize c'u - u'Bhat u / 2 over a box or Euclidean ball.

    Projected gradient ascent with fixed step 1/L, where L is a 50-step
    power-iteration estimate of the largest eigenvalue of Bhat.  A vanishing
    curvature estimate routes to the exact linear-objective solution.
    Returns (maximizer, value).
    """
    Bhat = np.asarray(Bhat, dtype=float)
    c = _vec(c, "c")
    if U.kind not in ("box", "euclidean_ball"):
        raise UnsupportedOperationError(f"unsupported constraint set kind {U.kind!r}")
    if Bhat.shape != (c.size, c.size):
        raise ValueError("Bhat must be square with the dimension of c")
    if U.dim != c.size:
        raise ValueError("constraint set dimension disagrees with c")

    lip = _power_iteration(Bhat)
    if lip <= 1e-13 * max(1.0, float(np.abs(c).max(initial=0.0))):
        return _linear_max_over_set(c, U)

    def value(u):
        return float(c @ u - 0.5 * u @ (Bhat @ u))

    step = 1.0 / lip
    u = project(U, np.zeros(c.size))
    move = np.inf
    for it in range(max_iter):
        g = c - Bhat @ u
        u_next = project(U, u + step * g)
        move = np.linalg.norm(u_next - u)
        u = u_next
        if np.linalg.norm(u) > 1e10:
            raise UnboundedObjectiveError("QP iterates diverged; supremum appears unbounded")
        if move / step <= tol:
            return u, value(u)
    raise ConvergenceError(
        "projected gradient did not reach tolerance",
        best=(u, value(u)),
        residual=float(move / step),
        iterations=max_iter,
    )


def simplex_min_norm(G, tol=1e-9, max_iter=50_000):
    """Minimize ||G lam|| over the unit simplex by Frank-Wolfe.

    Uses the away-steps variant (plain Frank-Wolfe zigzags sublinearly when
    the minimizer sits on a face) with exact line search; terminates when
    the Frank-Wolfe gap certifies the squared objective to within tol^2.
    Returns (weights, ||G lam||).
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    d, k = G.shape
    if k < 1:
        raise ValueError("G needs at least one column")
    lam = np.full(k, 1.0 / k)
    p = G @ lam
    gap_tol = tol * tol
    for it in range(max_iter):
        grad = G.T @ p
        s = int(np.argmin(grad))
        lam_grad = float(lam @ grad)
        gap_fw = lam_grad - float(grad[s])
        # The gap certifies the squared objective; below the floating-point
        # floor of that certificate there is nothing left to resolve.
        gap_floor = 1e-15 * (1.0 + float(p @ p))
        if gap_fw <= max(gap_tol, gap_floor):
            break
        active = np.nonzero(lam > 0.0)[0]
        v = int(active[np.argmax(grad[active])])
        gap_away = float(grad[v]) - lam_grad
        if gap_fw >= gap_away or lam[v] >= 1.0:
            dlam_s, dlam_v = 1.0, None
            dvec = G[:, s] - p
            gamma_max = 1.0
        else:
            dlam_s, dlam_v = None, v
            dvec = p - G[:, v]
            gamma_max = lam[v] / (1.0 - lam[v])
        denom = float(dvec @ dvec)
        if denom <= 0.0:
            break
        gamma = min(gamma_max, max(0.0, -float(p @ dvec) / denom))
        if gamma * np.sqrt(denom) <= 1e-17 * (1.0 + np.linalg.norm(p)):
            break
        if dlam_v is None:
            lam *= 1.0 - gamma
            lam[s] += gamma
        else:
            lam *= 1.0 + gamma
            lam[v] -= gamma
            if lam[v] < 1e-15:
                lam[v] = 0.0
        lam = np.maximum(lam, 0.0)
        lam /= lam.sum()
        p = G @ lam
    else:
        raise ConvergenceError(
            "Frank-Wolfe iteration cap reached",
            best=(lam, float(np.linalg.norm(p))),
            residual=float(np.linalg.norm(p)),
            iterations=max_iter,
        )
    return lam, float(np.linalg.norm(p))


# ---------------------------------------------------------------------------
# Convex-function oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConvexFunctionOracle:
    """A proper lsc convex function given through callables.

    `value` may return +inf; `prox` (if present) maps (x, mu) to the
    minimizer of value(w) + ||w - x||^2 / (2 mu); `subdiff` (if present)
    returns the subdifferential at a point as a ConvexPolytope.
    """

    value: Callable[[Array], float]
    domain: ConvexSet
    prox: Optional[Callable[[Array, float], Array]] = None
    subdiff: Optional[Callable[[Array], ConvexPolytope]] = None
    name: str = ""


# ---------------------------------------------------------------------------
# EPLQ: theta(x) = sup_{u in U} <u, R x - b> - u' B u / 2
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EPLQSpec:
    """Data (U, B, R, b) of an extended piecewise linear-quadratic function."""

    U: ConvexSet
    B: Array
    R: Array
    b: Array

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def n(self) -> int:
        return self.R.shape[1]


def eplq_spec(U: ConvexSet, B, R, b, tol=1e-9) -> EPLQSpec:
    """Validated EPLQ data: U box or ball, B symmetric psd, R injective."""
    B = np.asarray(B, dtype=float)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    b = _vec(b, "b")
    if U.kind not in ("box", "euclidean_ball"):
        raise ValueError("EPLQ constraint set must be a box or a Euclidean ball")
    m = U.dim
    if B.shape != (m, m):
        raise ValueError("B must be m x m for the dimension m of U")
    if R.shape[0] != m or b.size != m:
        raise ValueError("R must have m rows and b length m")
    if np.linalg.norm(B - B.T) > tol * (1.0 + np.linalg.norm(B)):
        raise ValueError("B must be symmetric")
    if B.any() and np.linalg.eigvalsh(B).min() < -tol:
        raise ValueError("B must be positive semidefinite")
    sv = np.linalg.svd(R, compute_uv=False)
    if R.shape[1] > R.shape[0] or sv.min() <= 1e-10 * max(1.0, sv.max()):
        raise ValueError("R must have full column rank")
    return EPLQSpec(U=U, B=B, R=R, b=b)


def _u_is_bounded(U: ConvexSet) -> bool:
    if U.kind == "euclidean_ball":
        return True
    return bool(np.all(np.isfinite(U.lo)) and np.all(np.isfinite(U.hi)))


def _b_is_pd(B: Array, tol=1e-10) -> bool:
    if not B.any():
        return False
    w = np.linalg.eigvalsh(B)
    return bool(w.min() > tol * max(1.0, w.max()))


def eplq_value(spec: EPLQSpec, x, qp_tol=1e-9, max_iter=50_000):
    """Value of the EPLQ function at x together with a maximizer u*.

    Requires a bounded U or a positive definite B, except that linear
    problems over partially unbounded boxes are solved exactly (raising when
    the supremum is genuinely infinite).
    """
    x = _vec(x, "x")
    if x.size != spec.n:
        raise ValueError(f"x has dimension {x.size}, EPLQ expects {spec.n}")
    c = spec.R @ x - spec.b
    if not (_u_is_bounded(spec.U) or _b_is_pd(spec.B) or not spec.B.any()):
        raise ValueError("EPLQ evaluation requires bounded U or positive definite B")
    u, value = box_qp_maximize(spec.B, c, spec.U, tol=qp_tol, max_iter=max_iter)
    return value, u


def eplq_subdifferential(spec: EPLQSpec, x, tie_tol=1e-9, qp_tol=1e-10) -> ConvexPolytope:
    """Subdifferential R' argmax-set of the EPLQ function at x.

    Positive definite B gives a singleton; B = 0 over a box enumerates the
    optimal vertices (ties within `tie_tol` of the best value are kept,
    over-approximating on purpose); everything else is rejected.
    """
    x = _vec(x, "x")
    c = spec.R @ x - spec.b
    m = spec.m

    if _b_is_pd(spec.B):
        _, u = eplq_value(spec, x, qp_tol=qp_tol)
        return polytope(generators=[spec.R.T @ u])

    if spec.B.any():
        raise UnsupportedOperationError(
            "argmax face of a singular quadratic part is not enumerable here"
        )

    if spec.U.kind == "euclidean_ball":
        nrm = np.linalg.norm(c)
        if nrm <= tie_tol:
            raise UnsupportedOperationError(
                "optimal face is the whole ball; not finitely generated"
            )
        u = spec.U.center + c * (spec.U.radius / nrm)
        return polytope(generators=[spec.R.T @ u])

    lo, hi = spec.U.lo, spec.U.hi
    fixed = np.empty(m)
    free, rays = [], []
    for i in range(m):
        width = hi[i] - lo[i]
        if np.isfinite(width):
            tied = abs(c[i]) * max(width, 1.0) <= tie_tol
        else:
            tied = abs(c[i]) <= tie_tol
        if tied:
            if np.isfinite(width):
                if width <= tie_tol:
                    fixed[i] = lo[i]
                else:
                    free.append(i)
            else:
                # Unbounded optimal face: its recession directions become rays.
                fixed[i] = min(max(0.0, lo[i]), hi[i])
                e = np.zeros(m)
                e[i] = 1.0
                if not np.isfinite(hi[i]):
                    rays.append(spec.R.T @ e)
                if not np.isfinite(lo[i]):
                    rays.append(spec.R.T @ -e)
        elif c[i] > 0:
            if not np.isfinite(hi[i]):
                raise UnboundedObjectiveError("subdifferential undefined: value is +inf")
            fixed[i] = hi[i]
        else:
            if not np.isfinite(lo[i]):
                raise UnboundedObjectiveError("subdifferential undefined: value is +inf")
            fixed[i] = lo[i]

    if len(free) > _MAX_ENUM_COORDS:
        raise UnsupportedOperationError(
            f"vertex enumeration over {len(free)} tied coordinates is not supported"
        )
    gens = []
    for corner in itertools.product(*[(lo[i], hi[i]) for i in free]):
        u = fixed.copy()
        for i, val in zip(free, corner):
            u[i] = val
        gens.append(spec.R.T @ u)
    return polytope(generators=gens, rays=rays if rays else None, dim=spec.n)


# ---------------------------------------------------------------------------
# Standard EPLQ penalties and their oracles
# ---------------------------------------------------------------------------

def one_norm_eplq(dim, weight=1.0) -> EPLQSpec:
    """weight * ||x||_1 as sup over the box [-weight, weight]^dim."""
    if weight <= 0:
        raise ValueError("weight must be positive")
    w = float(weight)
    return eplq_spec(box(-w * np.ones(dim), w * np.ones(dim)),
                     np.zeros((dim, dim)), np.eye(dim), np.zeros(dim))


def euclidean_norm_eplq(dim) -> EPLQSpec:
    """||x||_2 as sup over the unit ball."""
    return eplq_spec(euclidean_ball(np.zeros(dim), 1.0),
                     np.zeros((dim, dim)), np.eye(dim), np.zeros(dim))


def huber_eplq(dim, kappa=1.0) -> EPLQSpec:
    """Separable Huber penalty with threshold kappa."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    k = float(kappa)
    return eplq_spec(box(-k * np.ones(dim), k * np.ones(dim)),
                     np.eye(dim), np.eye(dim), np.zeros(dim))


def vapnik_eplq(dim, epsilon=0.5) -> EPLQSpec:
    """Separable epsilon-insensitive penalty sum_i max(|x_i| - eps, 0)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    eye = np.eye(dim)
    R = np.vstack([eye, -eye])
    return eplq_spec(box(np.zeros(2 * dim), np.ones(2 * dim)),
                     np.zeros((2 * dim, 2 * dim)), R,
                     float(epsilon) * np.ones(2 * dim))


def one_norm_oracle(dim, weight=1.0) -> ConvexFunctionOracle:
    """weight * ||.||_1 with soft-thresholding prox."""
    w = float(weight)
    if w <= 0:
        raise ValueError("weight must be positive")
    spec = one_norm_eplq(dim, w)

    def value(x):
        return w * float(np.abs(np.asarray(x, dtype=float)).sum())

    def prox(x, mu):
        x = np.asarray(x, dtype=float)
        t = w * mu
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    return ConvexFunctionOracle(
        value=value, prox=prox, domain=whole_space(dim),
        subdiff=lambda x: eplq_subdifferential(spec, x),
        name=f"{w}*one_norm" if w != 1.0 else "one_norm",
    )


def euclidean_norm_oracle(dim) -> ConvexFunctionOracle:
    def value(x):
        return float(np.linalg.norm(x))

    def prox(x, mu):
        x = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(x)
        if nrm <= mu:
            return np.zeros_like(x)
        return x * (1.0 - mu / nrm)

    spec = euclidean_norm_eplq(dim)
    return ConvexFunctionOracle(
        value=value, prox=prox, domain=whole_space(dim),
        subdiff=lambda x: eplq_subdifferential(spec, x),
        name="euclidean_norm",
    )


def huber_oracle(dim, kappa=1.0) -> ConvexFunctionOracle:
    k = float(kappa)
    spec = huber_eplq(dim, k)

    def value(x):
        x = np.abs(np.asarray(x, dtype=float))
        return float(np.sum(np.where(x <= k, 0.5 * x * x, k * x - 0.5 * k * k)))

    def prox(x, mu):
        x = np.asarray(x, dtype=float)
        shrunk = x / (1.0 + mu)
        linear = x - mu * k * np.sign(x)
        return np.where(np.abs(shrunk) <= k, shrunk, linear)

    return ConvexFunctionOracle(
        value=value, prox=prox, domain=whole_space(dim),
        subdiff=lambda x: eplq_subdifferential(spec, x),
        name=f"huber[{k}]",
    )


def vapnik_oracle(dim, epsilon=0.5) -> ConvexFunctionOracle:
    eps = float(epsilon)
    spec = vapnik_eplq(dim, eps)

    def value(x):
        return float(np.maximum(np.abs(np.asarray(x, dtype=float)) - eps, 0.0).sum())

    def prox(x, mu):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        out = np.where(a <= eps, a, np.where(a <= eps + mu, eps, a - mu))
        return np.sign(x) * out

    return ConvexFunctionOracle(
        value=value, prox=prox, domain=whole_space(dim),
        subdiff=lambda x: eplq_subdifferential(spec, x),
        name=f"vapnik[{eps}]",
    )


def indicator_oracle(set_: ConvexSet, tol=1e-9) -> ConvexFunctionOracle:
    """Indicator of a supported set: prox is projection, subdifferential the
    normal cone."""

    def value(y):
        return 0.0 if contains(set_, y, tol=tol) else float("inf")

    return ConvexFunctionOracle(
        value=value,
        prox=lambda y, mu: project(set_, y),
        domain=set_,
        subdiff=lambda y: normal_cone(set_, y, tol=tol),
        name=f"indicator[{set_.kind}]",
    )


def zero_oracle(dim) -> ConvexFunctionOracle:
    return ConvexFunctionOracle(
        value=lambda x: 0.0,
        prox=lambda x, mu: np.asarray(x, dtype=float).copy(),
        domain=whole_space(dim),
        subdiff=lambda x: polytope(generators=[np.zeros(dim)]),
        name="zero",
    )


def oracle_from_eplq(spec: EPLQSpec, name="eplq", qp_tol=1e-10) -> ConvexFunctionOracle:
    """Generic oracle for a supported EPLQ function.

    The prox comes from the envelope identity: the envelope of theta with
    parameter mu is the same EPLQ family with B replaced by B + mu R R', and
    its maximizer u* gives prox(x) = x - mu R' u*.
    """

    def value(x):
        return eplq_value(spec, x, qp_tol=qp_tol)[0]

    def prox(x, mu):
        x = np.asarray(x, dtype=float)
        shifted = EPLQSpec(U=spec.U, B=spec.B + mu * spec.R @ spec.R.T, R=spec.R, b=spec.b)
        _, u = eplq_value(shifted, x, qp_tol=qp_tol)
        return x - mu * (spec.R.T @ u)

    return ConvexFunctionOracle(
        value=value, prox=prox, domain=whole_space(spec.n),
        subdiff=lambda x: eplq_subdifferential(spec, x),
        name=name,
    )
