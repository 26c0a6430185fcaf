"""Named verification suites over the built-in catalog.

Each suite is a fixed list of probes with expected outcomes.  Negative
controls (constructions that must fail their probe) are first-class: a suite
passes only if every expected pass passes and every expected failure fails.
Entries are deterministic for a fixed seed, so two runs serialize to
identical reports.
"""
from __future__ import annotations

import numpy as np

from . import convex_core as cc
from . import verify as vf
from .catalog import build_problem, builtin_problem
from .composite import CompositeProblem, SmoothMap, bcq_check, composite_family, composite_subdifferential
from .constrained import CLASS_INFEASIBLE, CLASS_KKT, ecq_check, penalty_family
from .smoothing import (
    SmoothingFamily,
    eplq_moreau,
    infconv_smoother,
    kernel_huber_growth,
    kernel_linear,
    kernel_quadratic,
    moreau_envelope,
)
from .solver import ContinuationConfig, continuation_solve

SUITE_NAMES = ("kernels", "envelopes", "consistency", "composite", "all")


def _config(seed, probe, base_point=None, **kw):
    return vf.ProbeConfig(
        base_point=np.zeros(1) if base_point is None else np.asarray(base_point, dtype=float),
        seed=seed,
        **kw,
    )


def _abs_family():
    return infconv_smoother(cc.one_norm_oracle(1), kernel_quadratic())


def _square_minus_one_problem():
    g = cc.one_norm_oracle(1)
    H = SmoothMap(
        value=lambda x: np.array([x[0] ** 2 - 1.0]),
        jacobian=lambda x: np.array([[2.0 * x[0]]]),
        n=1, m=1, name="x^2-1",
    )
    return CompositeProblem(g=g, H=H, family_g=infconv_smoother(g, kernel_quadratic()))


def _eplq_identity_probe(seed):
    """Closed-form envelope of EPLQ penalties versus the prox route."""
    rng = vf._rng(_config(seed, "eplq_identity"), "eplq_identity")
    pairs = [
        (cc.one_norm_eplq(2), cc.one_norm_oracle(2)),
        (cc.huber_eplq(2), cc.huber_oracle(2)),
        (cc.vapnik_eplq(2), cc.vapnik_oracle(2)),
    ]
    worst = np.inf
    witness = None
    tol = 1e-6
    for spec, oracle in pairs:
        for _ in range(40):
            x = rng.standard_normal(2) * 3
            mu = 10 ** rng.uniform(-3, 0)
            closed, _ = cc.eplq_value(eplq_moreau(spec, mu), x)
            direct = moreau_envelope(oracle, mu, x)
            slack = tol - abs(closed - direct)
            if slack < worst:
                worst, witness = slack, x
    return vf.ProbeReport(
        probe="eplq_envelope_identity", passed=worst >= 0.0, margin=float(worst),
        witness=tuple(witness) if worst < 0.0 else None,
        detail=f"worst identity slack {worst:.3e} at tolerance {tol:g}",
    )


def _bcq_decision_probe(name, expected_holds):
    if name == "flat_square":
        g = cc.indicator_oracle(cc.singleton([0.0]))
        H = SmoothMap(
            value=lambda x: np.array([x[0] ** 2]),
            jacobian=lambda x: np.array([[2.0 * x[0]]]),
            n=1, m=1, name="x^2",
        )
    else:
        g = cc.indicator_oracle(cc.singleton([0.0]))
        H = SmoothMap(
            value=lambda x: x.copy(), jacobian=lambda x: np.eye(1), n=1, m=1, name="x"
        )
    problem = CompositeProblem(g=g, H=H, family_g=infconv_smoother(g, kernel_quadratic()))
    report = bcq_check(problem, [0.0])
    agreed = report.holds == expected_holds
    return vf.ProbeReport(
        probe=f"bcq_decision_{name}", passed=agreed,
        margin=float(report.residual if np.isfinite(report.residual) else 1.0),
        witness=(0.0,) if not agreed else None,
        detail=f"holds={report.holds} (expected {expected_holds}), residual {report.residual:.3e}",
    )


def _penalty_equals_calculus_probe(seed):
    from . import smoothing as sm
    from .constrained import ConstrainedProblem

    p = build_problem(builtin_problem("circle_inequality"))
    ind = infconv_smoother(cc.indicator_oracle(p.constrained.C), kernel_quadratic())
    lifted = sm.calculus_affine([[0.0, 1.0]], [0.0], ind)
    gamma = sm.SmoothFunction(
        value=lambda z: float(z[0]), gradient=lambda z: np.array([1.0, 0.0]), name="gamma"
    )
    family_g = sm.calculus_sum_smooth(gamma, lifted)
    H = SmoothMap(
        value=lambda x: np.concatenate(
            [[p.constrained.objective.value(x)], p.constrained.h.value(x)]
        ),
        jacobian=lambda x: np.vstack(
            [p.constrained.objective.gradient(x), p.constrained.h.jacobian(x)]
        ),
        n=2, m=2, name="(objective,constraint)",
    )
    chained = composite_family(
        CompositeProblem(g=cc.zero_oracle(2), H=H, family_g=family_g)
    )
    direct = penalty_family(p.constrained)
    rng = vf._rng(_config(seed, "penalty_calculus"), "penalty_calculus")
    worst = np.inf
    witness = None
    for _ in range(60):
        x = rng.standard_normal(2) * 2
        mu = 10 ** rng.uniform(-2, 0)
        value = direct.eval(x, mu)
        gap = abs(chained.eval(x, mu) - value)
        gap = max(gap, float(np.max(np.abs(chained.grad(x, mu) - direct.grad(x, mu)))))
        # agreement at the 1e-12 level relative to the magnitude in play
        slack = 1e-12 * (1.0 + abs(value)) - gap
        if slack < worst:
            worst, witness = slack, x
    return vf.ProbeReport(
        probe="penalty_equals_calculus", passed=worst >= 0.0, margin=float(worst),
        witness=tuple(witness) if worst < 0.0 else None,
        detail=f"worst pointwise gap slack {worst:.3e}",
    )


def _terminal_classification_probe():
    built = build_problem(builtin_problem("infeasible_quadratic"))
    result = continuation_solve(
        built.family, built.config, built.x0, diagnostics=built.constrained
    )
    ecq = ecq_check(built.constrained, result.x, tol=1e-6)
    ok = (
        result.kkt is not None
        and result.kkt.classification == CLASS_INFEASIBLE
        and abs(result.x[0]) <= 1e-3
        and not ecq.holds
    )
    return vf.ProbeReport(
        probe="infeasible_terminal_classification", passed=ok,
        margin=float(1e-3 - abs(result.x[0])),
        witness=tuple(result.x) if not ok else None,
        detail=(
            f"classification {result.kkt.classification if result.kkt else 'none'}, "
            f"|x| = {abs(result.x[0]):.2e}, ecq holds={ecq.holds}"
        ),
    )


def _circle_kkt_probe():
    built = build_problem(builtin_problem("circle_inequality"))
    result = continuation_solve(
        built.family, built.config, built.x0, diagnostics=built.constrained
    )
    y = result.trace.stages[-1].multiplier
    target = 1.0 / np.sqrt(2.0)
    ok = (
        result.kkt is not None
        and result.kkt.classification == CLASS_KKT
        and abs(y[0] - target) <= 1e-4
        and float(np.max(np.abs(result.x + target))) <= 1e-4
    )
    return vf.ProbeReport(
        probe="circle_kkt_recovery", passed=ok,
        margin=float(1e-4 - abs(y[0] - target)),
        witness=tuple(result.x) if not ok else None,
        detail=f"multiplier {y[0]:.8f}, classification "
               f"{result.kkt.classification if result.kkt else 'none'}",
    )


def _circle_family_and_inf():
    built = build_problem(builtin_problem("circle_inequality"))
    return built.family, -float(np.sqrt(2.0)), built.x0


def _lasso_family_and_inf():
    built = build_problem(builtin_problem("lasso_small"))
    return built.family, 0.395, built.x0


def _broken_family():
    fam = _abs_family()
    return SmoothingFamily(
        eval=lambda x, mu: fam.eval(x, mu) - 1.0 / mu,
        grad=fam.grad,
        target="shifted envelope (negative control)",
    )


def _suite_kernels(seed):
    cfg = lambda name: _config(seed, name, base_point=np.zeros(2))
    return [
        ("kernels", vf.kernel_epilimit_probe(
            kernel_quadratic(), cfg("kernel_quadratic"), name="kernel_quadratic"), False),
        ("kernels", vf.kernel_epilimit_probe(
            kernel_linear([1.0, 0.0]), cfg("kernel_linear"), name="kernel_linear"), True),
        ("kernels", vf.kernel_epilimit_probe(
            kernel_huber_growth(), cfg("kernel_huber_growth"), name="kernel_huber_growth"), True),
    ]


def _suite_envelopes(seed):
    entries = []
    rng = vf._rng(_config(seed, "envelope_points"), "envelope_points")
    oracles = [
        ("one_norm", cc.one_norm_oracle(2)),
        ("huber", cc.huber_oracle(2)),
        ("vapnik", cc.vapnik_oracle(2)),
        ("box_indicator", cc.indicator_oracle(cc.box([-1, -1], [1, 1]))),
    ]
    for label, oracle in oracles:
        fam = infconv_smoother(oracle, kernel_quadratic())
        pts = [rng.standard_normal(2) * 2 for _ in range(12)]
        mu = 0.3
        entries.append((
            "envelopes",
            vf.check_gradient(
                lambda x, f=fam: f.eval(x, mu), lambda x, f=fam: f.grad(x, mu),
                pts, tol=1e-5, name=f"envelope_gradient_{label}",
            ),
            False,
        ))
        entries.append((
            "envelopes",
            vf.monotonicity_probe(
                fam, oracle.value, pts, [1.0, 0.3, 0.1, 0.01],
                name=f"envelope_monotone_{label}",
            ),
            False,
        ))
    entries.append(("envelopes", _eplq_identity_probe(seed), False))
    entries.append((
        "envelopes",
        vf.epi_liminf_probe(_abs_family(), lambda x: float(np.abs(x).sum()),
                            _config(seed, "liminf_abs"), name="liminf_abs"),
        False,
    ))
    entries.append((
        "envelopes",
        vf.epi_limsup_probe(_abs_family(), lambda x: float(np.abs(x).sum()),
                            _config(seed, "limsup_abs", base_point=[1.3]),
                            name="limsup_abs"),
        False,
    ))
    entries.append((
        "envelopes",
        vf.epi_liminf_probe(_broken_family(), lambda x: float(np.abs(x).sum()),
                            _config(seed, "liminf_broken"), name="liminf_shifted_control"),
        True,
    ))
    return entries


def _suite_consistency(seed):
    spec1 = cc.one_norm_eplq(1)
    fam = _abs_family()
    entries = [
        (
            "consistency",
            vf.gradient_consistency_probe(
                fam, lambda x: cc.eplq_subdifferential(spec1, x), np.zeros(1),
                _config(seed, "consistency_abs", samples_per_shell=2000),
                name="consistency_abs_kink",
            ),
            False,
        ),
        (
            "consistency",
            vf.gradient_consistency_probe(
                fam, lambda x: cc.eplq_subdifferential(spec1, x), np.array([2.0]),
                _config(seed, "consistency_abs_smooth", base_point=[2.0]),
                name="consistency_abs_smooth_point",
            ),
            False,
        ),
    ]
    hub = infconv_smoother(cc.huber_oracle(1), kernel_quadratic())
    spec_h = cc.huber_eplq(1)
    entries.append((
        "consistency",
        vf.gradient_consistency_probe(
            hub, lambda x: cc.eplq_subdifferential(spec_h, x), np.array([0.4]),
            _config(seed, "consistency_huber", base_point=[0.4]),
            name="consistency_huber_smooth",
        ),
        False,
    ))
    return entries


def _suite_composite(seed):
    problem = _square_minus_one_problem()
    fam = composite_family(problem)
    entries = [
        (
            "composite",
            vf.gradient_consistency_probe(
                fam, lambda x: composite_subdifferential(problem, x), np.array([1.0]),
                _config(seed, "consistency_composite", base_point=[1.0],
                        samples_per_shell=4000),
                name="consistency_composite_kink",
            ),
            False,
        ),
        ("composite", _bcq_decision_probe("flat_square", expected_holds=False), False),
        ("composite", _bcq_decision_probe("identity", expected_holds=True), False),
        (
            "composite",
            vf.monotonicity_probe(
                fam, lambda x: abs(x[0] ** 2 - 1.0),
                [np.array([v]) for v in (-1.5, 0.2, 1.0, 2.0)],
                [1.0, 0.3, 0.1, 0.01], name="composite_monotone_transfer",
            ),
            False,
        ),
        ("composite", _penalty_equals_calculus_probe(seed), False),
    ]
    lasso_fam, lasso_inf, lasso_x0 = _lasso_family_and_inf()
    entries.append((
        "composite",
        vf.inf_convergence_probe(lasso_fam, lasso_inf, ContinuationConfig(), lasso_x0,
                                 name="inf_convergence_lasso"),
        False,
    ))
    circle_fam, circle_inf, circle_x0 = _circle_family_and_inf()
    entries.append((
        "composite",
        vf.inf_convergence_probe(circle_fam, circle_inf, ContinuationConfig(), circle_x0,
                                 name="inf_convergence_circle"),
        False,
    ))
    entries.append(("composite", _circle_kkt_probe(), False))
    entries.append(("composite", _terminal_classification_probe(), False))
    return entries


_SUITES = {
    "kernels": _suite_kernels,
    "envelopes": _suite_envelopes,
    "consistency": _suite_consistency,
    "composite": _suite_composite,
}


def run_suite(name, seed=0):
    """Run one named suite (or all of them); returns a list of entry dicts."""
    if name not in SUITE_NAMES:
        raise KeyError(f"unknown suite {name!r}")
    names = list(_SUITES) if name == "all" else [name]
    entries = []
    for suite_name in names:
        for suite, report, required_failure in _SUITES[suite_name](seed):
            ok = (not report.passed) if required_failure else report.passed
            record = {"suite": suite, "required_failure": required_failure, "ok": ok}
            record.update(vf.report_to_dict(report))
            entries.append(record)
    return entries


def suite_passed(entries) -> bool:
    return all(e["ok"] for e in entries)
