"""Infimal-convolution smoothing.

A smoothing family replaces a nonsmooth target f by a parametrized family
s(., mu) of continuously differentiable functions whose epigraphs converge to
the epigraph of f as mu decreases to zero.  The workhorse construction is the
infimal convolution of a convex oracle g with a scaled kernel
omega_mu(y) = mu * omega(y / mu); the quadratic kernel gives the Moreau
envelope, whose minimizer map is the prox.  A small calculus (sums, positive
scaling, affine and smooth composition) combines families while tracking the
flags that the convergence arguments need: monotonicity in mu (guaranteed by
kernels with omega(0) <= 0) and continuous convergence (finite-valued
targets).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .convex_core import (
    Array,
    ConvexFunctionOracle,
    EPLQSpec,
    eplq_value,
    _vec,
)
from .errors import ConvergenceError

_INNER_CACHE_SIZE = 128


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Kernel:
    """A convex, continuously differentiable kernel with Lipschitz gradient.

    The flags record the analytic properties downstream constructions key on:
    `one_coercive` (value grows superlinearly), `zero_at_origin_nonpositive`
    (omega(0) <= 0, which makes envelopes monotone in mu), and
    `continuously_convergent`.
    """

    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    grad_lipschitz: float
    one_coercive: bool
    zero_at_origin_nonpositive: bool
    continuously_convergent: bool
    kind: str = "generic"


def kernel_quadratic() -> Kernel:
    """The half squared norm, the kernel behind Moreau envelopes."""
    return Kernel(
        value=lambda y: 0.5 * float(np.asarray(y) @ np.asarray(y)),
        gradient=lambda y: np.asarray(y, dtype=float).copy(),
        grad_lipschitz=1.0,
        one_coercive=True,
        zero_at_origin_nonpositive=True,
        continuously_convergent=True,
        kind="quadratic",
    )


def kernel_linear(a) -> Kernel:
    """A linear kernel a'y.  Not 1-coercive: a designated negative control."""
    a = _vec(a, "a")
    return Kernel(
        value=lambda y: float(a @ np.asarray(y, dtype=float)),
        gradient=lambda y: a.copy(),
        grad_lipschitz=0.0,
        one_coercive=False,
        zero_at_origin_nonpositive=True,
        continuously_convergent=False,
        kind="linear",
    )


def kernel_huber_growth(kappa=1.0) -> Kernel:
    """Separable kernel with linear growth (not 1-coercive); negative control."""
    k = float(kappa)

    def value(y):
        a = np.abs(np.asarray(y, dtype=float))
        return float(np.sum(np.where(a <= k, 0.5 * a * a, k * a - 0.5 * k * k)))

    def gradient(y):
        y = np.asarray(y, dtype=float)
        return np.clip(y, -k, k)

    return Kernel(
        value=value, gradient=gradient, grad_lipschitz=1.0,
        one_coercive=False, zero_at_origin_nonpositive=True,
        continuously_convergent=False, kind="huber_growth",
    )


def scaled_kernel_value(kernel: Kernel, mu, y) -> float:
    """omega_mu(y) = mu * omega(y / mu)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    y = _vec(y)
    return float(mu * kernel.value(y / mu))


def scaled_kernel_gradient(kernel: Kernel, mu, y) -> Array:
    """Gradient of omega_mu at y, which is omega'(y / mu)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    y = _vec(y)
    return np.asarray(kernel.gradient(y / mu), dtype=float)


# ---------------------------------------------------------------------------
# Smoothing families
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SmoothingFamily:
    """A family s(x, mu) with exact gradients in x for every mu > 0."""

    eval: Callable[[Array, float], float]
    grad: Callable[[Array, float], Array]
    target: str
    monotone_in_mu: bool = False
    continuously_convergent: bool = False
    provenance: tuple = ()


@dataclass(frozen=True, eq=False)
class SmoothFunction:
    """A continuously differentiable function given by value and gradient."""

    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    name: str = ""


def assert_continuously_convergent(family: SmoothingFamily) -> SmoothingFamily:
    """Caller-asserted continuous convergence, recorded in the provenance."""
    return replace(
        family,
        continuously_convergent=True,
        provenance=family.provenance + ("continuous convergence asserted by caller",),
    )


def assert_monotone(family: SmoothingFamily) -> SmoothingFamily:
    """Caller-asserted monotonicity in mu, recorded in the provenance."""
    return replace(
        family,
        monotone_in_mu=True,
        provenance=family.provenance + ("monotonicity in mu asserted by caller",),
    )


# ---------------------------------------------------------------------------
# Infimal convolution with a kernel
# ---------------------------------------------------------------------------

def _ternary_minimize(f, x0, expand_cap=1e12, iters=300):
    # Bracket a 1-D convex function around x0, then shrink by thirds.
    span = 1.0
    fx = f(x0)
    while not (f(x0 - span) > fx and f(x0 + span) > fx):
        span *= 2.0
        if span > expand_cap:
            raise ConvergenceError("could not bracket a 1-D minimizer")
    lo, hi = x0 - span, x0 + span
    for _ in range(iters):
        third = (hi - lo) / 3.0
        a, b = lo + third, hi - third
        if f(a) <= f(b):
            hi = b
        else:
            lo = a
        if hi - lo < 1e-14 * (1.0 + abs(lo)):
            break
    return 0.5 * (lo + hi)


def _infconv_argmin(g: ConvexFunctionOracle, kernel: Kernel, x: Array, mu: float,
                    tol: float, max_iter: int) -> Array:
    """Minimize g(u) + omega_mu(x - u) over u, warm-started at u = x.

    The kernel part is smooth with gradient Lipschitz constant L/mu, so a
    proximal-gradient iteration on it (prox of g, gradient step on the
    kernel) converges with the fixed step mu/L.
    """
    if g.prox is None:
        if x.size != 1:
            raise ConvergenceError(
                "inner infimal-convolution solve needs a prox oracle beyond 1-D"
            )
        f = lambda u: g.value(np.array([u])) + scaled_kernel_value(kernel, mu, x - np.array([u]))
        return np.array([_ternary_minimize(f, float(x[0]))])

    lip = max(kernel.grad_lipschitz, 1e-12) / mu
    step = 1.0 / lip
    u = x.copy()
    for _ in range(max_iter):
        # gradient of u -> omega_mu(x - u)
        gq = -scaled_kernel_gradient(kernel, mu, x - u)
        u_next = g.prox(u - step * gq, step)
        move = float(np.linalg.norm(u_next - u))
        u = u_next
        if move / step <= tol:
            return u
    raise ConvergenceError(
        "inner infimal-convolution solve did not converge",
        best=u, residual=move / step, iterations=max_iter,
    )


def infconv_smoother(g: ConvexFunctionOracle, kernel: Kernel,
                     assume_bounded_below=False,
                     inner_tol=1e-9, inner_max_iter=20_000) -> SmoothingFamily:
    """Smoothing family (g # omega_mu)(x) = min_u g(u) + mu omega((x-u)/mu).

    With the quadratic kernel and a prox oracle the minimizer is the prox and
    the evaluation is the Moreau envelope; otherwise an inner
    proximal-gradient solve (warm-started at x) finds the minimizer.  The
    gradient in x is omega'((x - u*) / mu).

    A kernel that is not 1-coercive is accepted only when the caller asserts
    that g is bounded below (`assume_bounded_below=True`).
    """
    if not kernel.one_coercive and not assume_bounded_below:
        raise ValueError(
            "kernel is not 1-coercive; pass assume_bounded_below=True if g is bounded below"
        )

    closed_form = kernel.kind == "quadratic" and g.prox is not None

    if closed_form:
        def argmin(x, mu):
            return g.prox(np.asarray(x, dtype=float), mu)
    else:
        @lru_cache(maxsize=_INNER_CACHE_SIZE)
        def _solve(key, mu):
            x = np.frombuffer(key, dtype=float)
            return _infconv_argmin(g, kernel, x, mu, inner_tol, inner_max_iter)

        def argmin(x, mu):
            x = np.ascontiguousarray(x, dtype=float)
            return _solve(x.tobytes(), float(mu))

    def ev(x, mu):
        x = _vec(x)
        if mu <= 0:
            raise ValueError("mu must be positive")
        u = argmin(x, mu)
        return float(g.value(u)) + scaled_kernel_value(kernel, mu, x - u)

    def gr(x, mu):
        x = _vec(x)
        if mu <= 0:
            raise ValueError("mu must be positive")
        u = argmin(x, mu)
        return scaled_kernel_gradient(kernel, mu, x - u)

    return SmoothingFamily(
        eval=ev,
        grad=gr,
        target=g.name or "g",
        monotone_in_mu=kernel.zero_at_origin_nonpositive,
        continuously_convergent=(
            kernel.one_coercive and g.domain is not None
            and g.domain.kind == "whole_space"
        ),
        provenance=(f"infconv({g.name or 'g'}, {kernel.kind} kernel)",),
    )


# ---------------------------------------------------------------------------
# Moreau envelope and proximal mapping
# ---------------------------------------------------------------------------

def moreau_prox(g: ConvexFunctionOracle, mu, x) -> Array:
    """The proximal point argmin_w g(w) + ||w - x||^2 / (2 mu)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    x = _vec(x)
    if g.prox is not None:
        return np.asarray(g.prox(x, mu), dtype=float)
    if x.size != 1:
        raise ConvergenceError("prox oracle unavailable and inner solve supports only 1-D")
    f = lambda w: g.value(np.array([w])) + (w - float(x[0])) ** 2 / (2.0 * mu)
    return np.array([_ternary_minimize(f, float(x[0]))])


def moreau_envelope(g: ConvexFunctionOracle, mu, x) -> float:
    """Value of the Moreau envelope at x."""
    x = _vec(x)
    w = moreau_prox(g, mu, x)
    return float(g.value(w)) + float(np.sum((w - x) ** 2)) / (2.0 * mu)


def moreau_gradient(g: ConvexFunctionOracle, mu, x) -> Array:
    """Gradient of the Moreau envelope: (x - prox(x)) / mu."""
    x = _vec(x)
    return (x - moreau_prox(g, mu, x)) / mu


# ---------------------------------------------------------------------------
# EPLQ envelopes in closed form
# ---------------------------------------------------------------------------

def eplq_moreau(spec: EPLQSpec, mu) -> EPLQSpec:
    """Moreau envelope of an EPLQ function: the same data with B + mu R R'.

    Requires a bounded constraint set or positive definite quadratic part.
    """
    from .convex_core import _b_is_pd, _u_is_bounded
    from .errors import UnsupportedOperationError

    if mu <= 0:
        raise ValueError("mu must be positive")
    if not (_u_is_bounded(spec.U) or _b_is_pd(spec.B)):
        raise UnsupportedOperationError(
            "EPLQ envelope needs bounded U or positive definite B"
        )
    return EPLQSpec(U=spec.U, B=spec.B + mu * spec.R @ spec.R.T, R=spec.R, b=spec.b)


def eplq_moreau_family(spec: EPLQSpec, name="eplq", qp_tol=1e-10) -> SmoothingFamily:
    """Smoothing family for an EPLQ target evaluated through the closed-form
    envelope identity; the gradient is R' u* for the shifted maximizer u*."""

    @lru_cache(maxsize=_INNER_CACHE_SIZE)
    def _solve(key, mu):
        x = np.frombuffer(key, dtype=float)
        value, u = eplq_value(eplq_moreau(spec, mu), x, qp_tol=qp_tol)
        return value, u

    def solve(x, mu):
        if mu <= 0:
            raise ValueError("mu must be positive")
        x = np.ascontiguousarray(x, dtype=float)
        return _solve(x.tobytes(), float(mu))

    return SmoothingFamily(
        eval=lambda x, mu: solve(x, mu)[0],
        grad=lambda x, mu: spec.R.T @ solve(x, mu)[1],
        target=name,
        monotone_in_mu=True,
        continuously_convergent=True,
        provenance=(f"eplq_moreau({name})",),
    )


# ---------------------------------------------------------------------------
# Calculus
# ---------------------------------------------------------------------------

def calculus_sum_smooth(smooth_part: SmoothFunction, family: SmoothingFamily) -> SmoothingFamily:
    """Add a continuously differentiable term to a family."""
    return SmoothingFamily(
        eval=lambda x, mu: float(smooth_part.value(np.asarray(x, dtype=float))) + family.eval(x, mu),
        grad=lambda x, mu: np.asarray(smooth_part.gradient(np.asarray(x, dtype=float)), dtype=float)
        + family.grad(x, mu),
        target=f"{smooth_part.name or 'smooth'} + {family.target}",
        monotone_in_mu=family.monotone_in_mu,
        continuously_convergent=family.continuously_convergent,
        provenance=family.provenance + (f"sum_smooth({smooth_part.name or 'smooth'})",),
    )


def calculus_sum_continuous(family_a: SmoothingFamily, family_b: SmoothingFamily) -> SmoothingFamily:
    """Sum of two families; the first must converge continuously to its target."""
    if not family_a.continuously_convergent:
        raise ValueError(
            "sum of families requires the first summand to be continuously convergent"
        )
    return SmoothingFamily(
        eval=lambda x, mu: family_a.eval(x, mu) + family_b.eval(x, mu),
        grad=lambda x, mu: family_a.grad(x, mu) + family_b.grad(x, mu),
        target=f"{family_a.target} + {family_b.target}",
        monotone_in_mu=family_a.monotone_in_mu and family_b.monotone_in_mu,
        continuously_convergent=family_a.continuously_convergent and family_b.continuously_convergent,
        provenance=family_a.provenance + family_b.provenance + ("sum_continuous",),
    )


def calculus_scale(lam, family: SmoothingFamily) -> SmoothingFamily:
    """Positive scaling of a family (this scales the smoothed values, which
    differs from smoothing the scaled target)."""
    lam = float(lam)
    if lam <= 0:
        raise ValueError("scale must be positive")
    return SmoothingFamily(
        eval=lambda x, mu: lam * family.eval(x, mu),
        grad=lambda x, mu: lam * family.grad(x, mu),
        target=f"{lam} * {family.target}",
        monotone_in_mu=family.monotone_in_mu,
        continuously_convergent=family.continuously_convergent,
        provenance=family.provenance + (f"scale({lam})",),
    )


def calculus_affine(A, b, family: SmoothingFamily) -> SmoothingFamily:
    """Pre-composition with x -> A x + b for a full-row-rank A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = _vec(b, "b")
    if A.shape[0] != b.size:
        raise ValueError("A and b dimensions disagree")
    sv = np.linalg.svd(A, compute_uv=False)
    if A.shape[0] > A.shape[1] or sv.min() <= 1e-10:
        raise ValueError("affine pre-composition requires full row rank")
    return SmoothingFamily(
        eval=lambda x, mu: family.eval(A @ np.asarray(x, dtype=float) + b, mu),
        grad=lambda x, mu: A.T @ family.grad(A @ np.asarray(x, dtype=float) + b, mu),
        target=f"{family.target} o affine",
        monotone_in_mu=family.monotone_in_mu,
        continuously_convergent=family.continuously_convergent,
        provenance=family.provenance + ("affine_precompose",),
    )


def calculus_nonlinear_compose(F, family: SmoothingFamily,
                               metric_regularity_asserted=True) -> SmoothingFamily:
    """Pre-composition with a smooth map F (value/jacobian oracle).

    Metric regularity of F is an assertion by the caller; it is recorded in
    the provenance, not verified.
    """
    note = ("metric regularity asserted" if metric_regularity_asserted
            else "metric regularity NOT asserted")
    return SmoothingFamily(
        eval=lambda x, mu: family.eval(F.value(np.asarray(x, dtype=float)), mu),
        grad=lambda x, mu: np.asarray(F.jacobian(np.asarray(x, dtype=float)), dtype=float).T
        @ family.grad(F.value(np.asarray(x, dtype=float)), mu),
        target=f"{family.target} o {getattr(F, 'name', 'F')}",
        monotone_in_mu=family.monotone_in_mu,
        continuously_convergent=family.continuously_convergent,
        provenance=family.provenance + (f"nonlinear_precompose({note})",),
    )
