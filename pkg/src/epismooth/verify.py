"""Numerical probes for the variational properties the package relies on.

Each probe samples a finite schedule of shrinking neighborhoods and smoothing
parameters and checks one claim: agreement of gradients with finite
differences, the two-sided epigraphical convergence inequalities, the
kernel dichotomy (only superlinearly growing kernels collapse onto the
origin), coverage of the limiting subdifferential by smoothed gradients, the
monotone envelope bounds, and convergence of stage minima to the true
infimum.  A probe is a certificate of consistency on its schedule, not a
proof; negative controls (constructions that must fail) are part of the
suites built on top.

Probes are deterministic: each derives its own random stream from the
configured seed and its probe name, so a fixed seed reproduces reports
byte for byte.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .convex_core import ConvexPolytope, polytope_distance, _vec
from .smoothing import Kernel, SmoothingFamily, scaled_kernel_value
from .solver import ContinuationConfig, continuation_solve

Array = np.ndarray


@dataclass
class ProbeConfig:
    """Shared sampling schedule and tolerances for the probes.

    `radii` and `mus` must decrease strictly to positive values; per-probe
    tolerances live in the `tolerances` mapping so that assertions never
    hard-code them.
    """

    base_point: Array = field(default_factory=lambda: np.zeros(1))
    radii: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    mus: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
    samples_per_shell: int = 200
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        self.base_point = np.asarray(self.base_point, dtype=float)
        for name, seq in (("radii", self.radii), ("mus", self.mus)):
            if any(a <= b for a, b in zip(seq, seq[1:])) or seq[-1] <= 0:
                raise ValueError(f"{name} must decrease strictly to a positive value")
        if self.samples_per_shell < 1:
            raise ValueError("samples_per_shell must be positive")

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))


@dataclass(frozen=True)
class ProbeReport:
    probe: str
    passed: bool
    margin: float
    witness: Optional[tuple] = None
    detail: str = ""


def _rng(config: ProbeConfig, probe_name: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{config.seed}:{probe_name}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def _unit_directions(rng, count, dim) -> Array:
    u = rng.standard_normal((count, dim))
    norms = np.linalg.norm(u, axis=1)
    norms[norms == 0] = 1.0
    return u / norms[:, None]


def _shell_samples(rng, x_bar, radius, count) -> Array:
    """Sample points of the closed ball around x_bar.

    In one dimension the samples are stratified over the interval so that
    coverage gaps shrink like 1/count; in higher dimensions they are drawn
    from the ball.
    """
    dim = x_bar.size
    if dim == 1:
        edges = np.linspace(-1.0, 1.0, count + 1)
        offsets = edges[:-1] + rng.random(count) * (edges[1] - edges[0])
        return x_bar[None, :] + radius * offsets[:, None]
    directions = _unit_directions(rng, count, dim)
    r = radius * rng.random(count) ** (1.0 / dim)
    return x_bar[None, :] + directions * r[:, None]


def report_to_dict(report: ProbeReport) -> dict:
    return {
        "probe": report.probe,
        "passed": report.passed,
        "margin": report.margin,
        "witness": list(report.witness) if report.witness is not None else None,
        "detail": report.detail,
    }


# ---------------------------------------------------------------------------
# gradient agreement
# ---------------------------------------------------------------------------

def check_gradient(value, gradient, points, h=None, tol=1e-6,
                   name="check_gradient") -> ProbeReport:
    """Central-difference check of a gradient oracle at the given points.

    The step defaults to 1e-6 * (1 + ||x||); the relative error uses
    max(1, ||fd||) as denominator.
    """
    worst = -np.inf
    witness = None
    for x in points:
        x = _vec(x)
        step = h if h is not None else 1e-6 * (1.0 + float(np.linalg.norm(x)))
        fd = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = step
            fd[i] = (value(x + e) - value(x - e)) / (2.0 * step)
        err = float(np.linalg.norm(fd - np.asarray(gradient(x), dtype=float)))
        rel = err / max(1.0, float(np.linalg.norm(fd)))
        if rel > worst:
            worst, witness = rel, x
    passed = worst <= tol
    return ProbeReport(
        probe=name,
        passed=passed,
        margin=float(tol - worst),
        witness=tuple(witness) if (witness is not None and not passed) else None,
        detail=f"max relative error {worst:.3e}",
    )


# ---------------------------------------------------------------------------
# epigraphical convergence, lower and upper branches
# ---------------------------------------------------------------------------

def epi_liminf_probe(family: SmoothingFamily, target_value, config: ProbeConfig,
                     name="epi_liminf") -> ProbeReport:
    """Lower branch: along every sampled sequence x_k -> x_bar paired with
    mu_k down to 0, the tail of the values must not undercut the target."""
    rng = _rng(config, name)
    x_bar = config.base_point
    target = float(target_value(x_bar))
    schedule = list(zip(config.radii, config.mus))
    tail_start = len(schedule) // 2
    tol = config.tol("liminf", 1e-4)
    blowup = config.tol("liminf_blowup", 1e3)

    worst = np.inf
    witness = None
    directions = _unit_directions(rng, config.samples_per_shell, x_bar.size)
    for u in directions:
        tail = [
            family.eval(x_bar + delta * u, mu)
            for delta, mu in schedule[tail_start:]
        ]
        low = min(tail)
        if np.isfinite(target):
            slack = low - (target - tol)
        else:
            slack = low - blowup
        if slack < worst:
            worst = slack
            witness = x_bar + schedule[-1][0] * u
    passed = worst >= 0.0
    detail = (
        f"target {target:.6g}, worst tail slack {worst:.3e}"
        if np.isfinite(target)
        else f"target +inf, min tail value vs blowup threshold {blowup:.3g}: slack {worst:.3e}"
    )
    return ProbeReport(
        probe=name, passed=passed, margin=float(worst),
        witness=tuple(witness) if not passed else None, detail=detail,
    )


def epi_limsup_probe(family: SmoothingFamily, target_value, config: ProbeConfig,
                     witness_sequence=None, name="epi_limsup") -> ProbeReport:
    """Upper branch: some sequence approaching the base point keeps the
    values at or below the target.

    Monotone families justify the constant sequence; otherwise the caller
    must supply `witness_sequence(k, mu_k) -> x_k`.  An infinite target is a
    vacuous pass and is recorded as such.
    """
    x_bar = config.base_point
    target = float(target_value(x_bar))
    if not np.isfinite(target):
        return ProbeReport(
            probe=name, passed=True, margin=0.0, witness=None,
            detail="target is +inf at the base point; upper branch vacuous",
        )
    if witness_sequence is None and not family.monotone_in_mu:
        raise ValueError(
            "upper epi-branch needs a monotone family or a witness sequence"
        )
    tol = config.tol("limsup", 1e-4)
    mus = list(config.mus)
    tail_start = len(mus) // 2
    values = []
    for k, mu in enumerate(mus):
        x_k = x_bar if witness_sequence is None else _vec(witness_sequence(k, mu))
        values.append(family.eval(x_k, mu))
    high = max(values[tail_start:])
    slack = (target + tol) - high
    return ProbeReport(
        probe=name, passed=slack >= 0.0, margin=float(slack),
        witness=tuple(x_bar) if slack < 0.0 else None,
        detail=f"target {target:.6g}, max tail value {high:.6g}",
    )


# ---------------------------------------------------------------------------
# kernel dichotomy
# ---------------------------------------------------------------------------

def kernel_epilimit_probe(kernel: Kernel, config: ProbeConfig,
                          name="kernel_epilimit") -> ProbeReport:
    """Collapse of mu * omega(. / mu) onto the indicator of the origin.

    (a) at sampled unit directions the value at the smallest mu must exceed
    the blowup threshold 1/tol; (b) the value at the origin, mu * omega(0),
    must vanish.  Kernels without superlinear growth are expected to fail (a).
    """
    rng = _rng(config, name)
    dim = config.base_point.size
    tol = config.tol("kernel_epilimit", 1e-3)
    origin_tol = config.tol("kernel_origin", 1e-6)
    mu_min = config.mus[-1]
    threshold = 1.0 / tol

    worst = np.inf
    witness = None
    for z in _unit_directions(rng, config.samples_per_shell, dim):
        slack = scaled_kernel_value(kernel, mu_min, z) - threshold
        if slack < worst:
            worst, witness = slack, z
    origin_value = abs(mu_min * float(kernel.value(np.zeros(dim))))
    origin_ok = origin_value <= origin_tol
    passed = worst >= 0.0 and origin_ok
    margin = min(worst, origin_tol - origin_value)
    return ProbeReport(
        probe=name, passed=passed, margin=float(margin),
        witness=tuple(witness) if not passed else None,
        detail=(
            f"min off-origin value {worst + threshold:.4g} vs threshold {threshold:.4g}; "
            f"origin value {origin_value:.3e}"
        ),
    )


# ---------------------------------------------------------------------------
# gradient consistency
# ---------------------------------------------------------------------------

def gradient_consistency_probe(family: SmoothingFamily, subdiff_oracle,
                               x_bar, config: ProbeConfig,
                               name="gradient_consistency") -> ProbeReport:
    """Two one-sided checks of smoothed gradients against a subdifferential.

    Containment: on each shell (radius delta_j, parameter mu_j) every sampled
    gradient stays within a shrinking distance of the polytope.  Coverage:
    every generator of the polytope is approached by some sampled gradient on
    the finest shell.
    """
    rng = _rng(config, name)
    x_bar = _vec(x_bar)
    poly: ConvexPolytope = subdiff_oracle(x_bar)
    scale = config.tol("consistency_containment_scale", 10.0)
    offset = config.tol("consistency_containment_offset", 1e-8)
    coverage_tol = config.tol("consistency_coverage", 0.02)

    worst = np.inf
    witness = None
    finest_grads = None
    for delta, mu in zip(config.radii, config.mus):
        points = _shell_samples(rng, x_bar, delta, config.samples_per_shell)
        grads = np.array([family.grad(x, mu) for x in points])
        dists = np.array([polytope_distance(poly, g) for g in grads])
        allowed = scale * delta + offset
        j = int(np.argmax(dists))
        slack = allowed - float(dists[j])
        if slack < worst:
            worst, witness = slack, points[j]
        finest_grads = grads
    for gen in poly.generators:
        gaps = np.linalg.norm(finest_grads - gen[None, :], axis=1)
        slack = coverage_tol - float(gaps.min())
        if slack < worst:
            worst, witness = slack, gen
    passed = worst >= 0.0
    return ProbeReport(
        probe=name, passed=passed, margin=float(worst),
        witness=tuple(witness) if not passed else None,
        detail=f"worst slack over containment and coverage {worst:.3e}",
    )


# ---------------------------------------------------------------------------
# monotone envelope bounds
# ---------------------------------------------------------------------------

def monotonicity_probe(family: SmoothingFamily, target_value, points, mu_list,
                       tol=1e-9, name="monotonicity") -> ProbeReport:
    """Values must be nondecreasing as mu decreases, capped by the target."""
    mu_list = list(mu_list)
    if any(a <= b for a, b in zip(mu_list, mu_list[1:])) or mu_list[-1] <= 0:
        raise ValueError("mu_list must decrease strictly to a positive value")
    worst = np.inf
    witness = None
    for x in points:
        x = _vec(x)
        values = [family.eval(x, mu) for mu in mu_list]
        for a, b in zip(values, values[1:]):
            slack = (b - a) + tol
            if slack < worst:
                worst, witness = slack, x
        target = float(target_value(x))
        if np.isfinite(target):
            slack = (target + tol) - values[-1]
            if slack < worst:
                worst, witness = slack, x
    passed = worst >= 0.0
    return ProbeReport(
        probe=name, passed=passed, margin=float(worst),
        witness=tuple(witness) if not passed else None,
        detail=f"worst monotonicity/bound slack {worst:.3e}",
    )


# ---------------------------------------------------------------------------
# infimum convergence through the continuation solver
# ---------------------------------------------------------------------------

def inf_convergence_probe(family: SmoothingFamily, true_inf, solver_config: ContinuationConfig,
                          x0, tol=1e-4, name="inf_convergence") -> ProbeReport:
    """Stage minima of a continuation run approach the known infimum.

    The target must be level-bounded, which is the caller's assertion.
    Solver failures propagate as probe failures.
    """
    try:
        result = continuation_solve(family, solver_config, np.asarray(x0, dtype=float))
    except Exception as exc:  # solver failure is a probe failure, not a crash
        return ProbeReport(
            probe=name, passed=False, margin=-np.inf,
            witness=tuple(np.asarray(x0, dtype=float)),
            detail=f"solver failed: {exc}",
        )
    err = abs(result.trace.stages[-1].value - float(true_inf))
    slack = tol - err
    return ProbeReport(
        probe=name, passed=slack >= 0.0, margin=float(slack),
        witness=tuple(result.x) if slack < 0.0 else None,
        detail=f"final stage value {result.trace.stages[-1].value:.8g}, "
               f"target {float(true_inf):.8g}, status {result.status}",
    )
