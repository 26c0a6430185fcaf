import dataclasses

import numpy as np
import pytest

from epismooth import composite as cp
from epismooth import convex_core as cc
from epismooth import smoothing as sm
from epismooth import solver as sv
from epismooth import verify as vf


def abs_family():
    return sm.infconv_smoother(cc.one_norm_oracle(1), sm.kernel_quadratic())


def abs_target(x):
    return float(np.abs(x).sum())


def config_1d(**kw):
    return vf.ProbeConfig(base_point=np.zeros(1), **kw)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_config_requires_decreasing_schedules():
    with pytest.raises(ValueError):
        vf.ProbeConfig(radii=(1e-1, 1e-1))
    with pytest.raises(ValueError):
        vf.ProbeConfig(mus=(1e-1, 1e-2, 1e-2))


def test_tolerances_are_parameters():
    cfg = config_1d(tolerances={"liminf": 0.5})
    assert cfg.tol("liminf", 1e-4) == 0.5
    assert cfg.tol("unset", 1e-4) == 1e-4


# ---------------------------------------------------------------------------
# check_gradient
# ---------------------------------------------------------------------------

def test_check_gradient_quadratic_exact():
    report = vf.check_gradient(
        lambda x: 0.5 * float(x @ x), lambda x: x,
        [np.array([1.0, 2.0]), np.array([-0.3, 0.7])],
    )
    assert report.passed


def test_check_gradient_moreau_smooth_points():
    fam = abs_family()
    mu = 0.25
    points = [np.array([v]) for v in (-2.0, -1.1, 0.9, 2.3)]
    report = vf.check_gradient(
        lambda x: fam.eval(x, mu), lambda x: fam.grad(x, mu), points, tol=1e-6
    )
    assert report.passed


def test_check_gradient_flags_wrong_oracle():
    report = vf.check_gradient(
        lambda x: 0.5 * float(x @ x), lambda x: 2.0 * x, [np.array([1.0, 1.0])]
    )
    assert not report.passed
    assert report.witness is not None


# ---------------------------------------------------------------------------
# epigraphical branches
# ---------------------------------------------------------------------------

def test_liminf_passes_for_moreau_family():
    report = vf.epi_liminf_probe(abs_family(), abs_target, config_1d())
    assert report.passed


def test_liminf_negative_control_fails():
    fam = abs_family()
    broken = sm.SmoothingFamily(
        eval=lambda x, mu: fam.eval(x, mu) - 1.0 / mu,
        grad=fam.grad,
        target="broken shift",
    )
    report = vf.epi_liminf_probe(broken, abs_target, config_1d())
    assert not report.passed
    assert report.witness is not None


def test_limsup_passes_for_monotone_family():
    cfg = vf.ProbeConfig(base_point=np.array([1.3]))
    report = vf.epi_limsup_probe(abs_family(), abs_target, cfg)
    assert report.passed


def test_limsup_needs_monotonicity_or_witness():
    fam = dataclasses.replace(abs_family(), monotone_in_mu=False)
    with pytest.raises(ValueError):
        vf.epi_limsup_probe(fam, abs_target, config_1d())
    report = vf.epi_limsup_probe(
        fam, abs_target, config_1d(), witness_sequence=lambda k, mu: np.zeros(1)
    )
    assert report.passed


def test_limsup_vacuous_at_infinite_target():
    indicator = cc.indicator_oracle(cc.box([0.0], [1.0]))
    fam = sm.infconv_smoother(indicator, sm.kernel_quadratic())
    cfg = vf.ProbeConfig(base_point=np.array([2.0]))
    report = vf.epi_limsup_probe(fam, indicator.value, cfg)
    assert report.passed
    assert "vacuous" in report.detail


def test_liminf_penalty_family_at_feasible_point():
    from epismooth import constrained as co

    p = co.ConstrainedProblem(
        objective=sm.SmoothFunction(
            value=lambda x: float(x[0] + x[1]),
            gradient=lambda x: np.array([1.0, 1.0]),
            name="sum",
        ),
        h=cp.SmoothMap(
            value=lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 1.0]),
            jacobian=lambda x: np.array([[2 * x[0], 2 * x[1]]]),
            n=2, m=1, name="circle",
        ),
        C=cc.zero_cross_negative(0, 1),
    )
    fam = co.penalty_family(p)
    x_bar = np.array([0.3, -0.4])
    # the objective is 2-Lipschitz, so the tail can undercut the target by
    # about sqrt(2) times the largest tail radius; size the tolerance to that
    cfg = vf.ProbeConfig(base_point=x_bar, tolerances={"liminf": 5e-3})
    report = vf.epi_liminf_probe(fam, lambda x: p.objective.value(x), cfg)
    assert report.passed


# ---------------------------------------------------------------------------
# kernel dichotomy
# ---------------------------------------------------------------------------

def test_kernel_probe_quadratic_passes():
    report = vf.kernel_epilimit_probe(sm.kernel_quadratic(), config_1d())
    assert report.passed


def test_kernel_probe_linear_fails():
    cfg = vf.ProbeConfig(base_point=np.zeros(2))
    report = vf.kernel_epilimit_probe(sm.kernel_linear([1.0, 0.0]), cfg)
    assert not report.passed
    assert report.witness is not None


def test_kernel_probe_linear_growth_fails():
    report = vf.kernel_epilimit_probe(sm.kernel_huber_growth(), config_1d())
    assert not report.passed


# ---------------------------------------------------------------------------
# gradient consistency
# ---------------------------------------------------------------------------

def test_consistency_abs_at_kink():
    fam = abs_family()
    spec = cc.one_norm_eplq(1)
    cfg = config_1d(samples_per_shell=2000)
    report = vf.gradient_consistency_probe(
        fam, lambda x: cc.eplq_subdifferential(spec, x), np.zeros(1), cfg
    )
    assert report.passed


def test_consistency_composite_kink():
    g = cc.one_norm_oracle(1)
    H = cp.SmoothMap(
        value=lambda x: np.array([x[0] ** 2 - 1.0]),
        jacobian=lambda x: np.array([[2.0 * x[0]]]),
        n=1, m=1, name="x^2-1",
    )
    problem = cp.CompositeProblem(
        g=g, H=H, family_g=sm.infconv_smoother(g, sm.kernel_quadratic())
    )
    fam = cp.composite_family(problem)
    cfg = vf.ProbeConfig(base_point=np.array([1.0]), samples_per_shell=4000)
    report = vf.gradient_consistency_probe(
        fam, lambda x: cp.composite_subdifferential(problem, x), np.array([1.0]), cfg
    )
    assert report.passed


def test_consistency_smooth_target_collapses():
    # smooth target: the gradient cloud must collapse onto the single gradient
    target = np.array([0.7, -0.2])
    fam = sm.SmoothingFamily(
        eval=lambda x, mu: 0.5 * float(np.sum((np.asarray(x) - target) ** 2)),
        grad=lambda x, mu: np.asarray(x, dtype=float) - target,
        target="quadratic",
        monotone_in_mu=True,
    )
    x_bar = np.array([1.0, 1.0])
    oracle = lambda x: cc.polytope(generators=[x_bar - target])
    cfg = vf.ProbeConfig(
        base_point=x_bar,
        tolerances={"consistency_coverage": 1e-4, "consistency_containment_scale": 2.0},
    )
    report = vf.gradient_consistency_probe(fam, oracle, x_bar, cfg)
    assert report.passed


def test_consistency_catches_escaping_gradients():
    fam = sm.SmoothingFamily(
        eval=lambda x, mu: float(x[0]) * 5.0,
        grad=lambda x, mu: np.array([5.0]),
        target="steep line",
        monotone_in_mu=True,
    )
    spec = cc.one_norm_eplq(1)
    report = vf.gradient_consistency_probe(
        fam, lambda x: cc.eplq_subdifferential(spec, x), np.zeros(1), config_1d()
    )
    assert not report.passed
    assert report.witness is not None


# ---------------------------------------------------------------------------
# monotonicity probe
# ---------------------------------------------------------------------------

def test_monotonicity_probe_instances():
    report = vf.monotonicity_probe(
        abs_family(), abs_target, [np.array([2.0])], [0.5, 0.25]
    )
    assert report.passed
    indicator = cc.indicator_oracle(cc.box([0.0], [1.0]))
    fam = sm.infconv_smoother(indicator, sm.kernel_quadratic())
    report = vf.monotonicity_probe(
        fam, indicator.value, [np.array([2.0]), np.array([0.5])], [1.0, 0.1, 0.01]
    )
    assert report.passed


def test_monotonicity_probe_constant_target():
    fam = sm.infconv_smoother(cc.zero_oracle(2), sm.kernel_quadratic())
    pts = [np.array([0.3, -0.8]), np.zeros(2)]
    report = vf.monotonicity_probe(fam, lambda x: 0.0, pts, [1.0, 0.5, 0.1])
    assert report.passed


def test_monotonicity_probe_rejects_bad_schedule():
    with pytest.raises(ValueError):
        vf.monotonicity_probe(abs_family(), abs_target, [np.zeros(1)], [0.1, 0.1])


def test_monotonicity_probe_detects_violation():
    fam = sm.SmoothingFamily(
        eval=lambda x, mu: float(mu),  # increases with mu: wrong direction
        grad=lambda x, mu: np.zeros(1),
        target="bad",
        monotone_in_mu=True,
    )
    report = vf.monotonicity_probe(fam, lambda x: -1.0, [np.zeros(1)], [1.0, 0.1])
    assert not report.passed


# ---------------------------------------------------------------------------
# infimum convergence
# ---------------------------------------------------------------------------

def test_inf_convergence_quadratic():
    target = np.array([1.0, -1.0])
    fam = sm.SmoothingFamily(
        eval=lambda x, mu: 0.5 * float(np.sum((np.asarray(x) - target) ** 2)) + 3.0,
        grad=lambda x, mu: np.asarray(x, dtype=float) - target,
        target="quadratic+3",
        monotone_in_mu=True,
    )
    report = vf.inf_convergence_probe(fam, 3.0, sv.ContinuationConfig(k_max=8), np.zeros(2))
    assert report.passed


def test_inf_convergence_detects_gap():
    fam = abs_family()
    report = vf.inf_convergence_probe(fam, 1.0, sv.ContinuationConfig(k_max=8), np.zeros(1))
    assert not report.passed


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------

def test_probe_reports_are_deterministic():
    def run():
        cfg = vf.ProbeConfig(base_point=np.zeros(1), seed=7)
        reports = [
            vf.epi_liminf_probe(abs_family(), abs_target, cfg),
            vf.kernel_epilimit_probe(sm.kernel_quadratic(), cfg),
            vf.gradient_consistency_probe(
                abs_family(),
                lambda x: cc.eplq_subdifferential(cc.one_norm_eplq(1), x),
                np.zeros(1),
                cfg,
            ),
        ]
        return [vf.report_to_dict(r) for r in reports]

    assert run() == run()


def test_different_probes_use_distinct_streams():
    cfg = vf.ProbeConfig(seed=7)
    a = vf._rng(cfg, "probe_a").random(4).tolist()
    b = vf._rng(cfg, "probe_b").random(4).tolist()
    assert a != b
