import numpy as np
import pytest

from epismooth import composite as cp
from epismooth import constrained as co
from epismooth import convex_core as cc
from epismooth import smoothing as sm


def linear_problem():
    # minimize x subject to x <= 0
    return co.ConstrainedProblem(
        objective=sm.SmoothFunction(
            value=lambda x: float(x[0]), gradient=lambda x: np.array([1.0]), name="x"
        ),
        h=cp.SmoothMap(
            value=lambda x: x.copy(), jacobian=lambda x: np.eye(1), n=1, m=1, name="x"
        ),
        C=co_set_nonpositive(),
    )


def co_set_nonpositive():
    return cc.zero_cross_negative(0, 1)


def circle_problem():
    # minimize x1 + x2 subject to ||x||^2 - 1 <= 0
    return co.ConstrainedProblem(
        objective=sm.SmoothFunction(
            value=lambda x: float(x[0] + x[1]),
            gradient=lambda x: np.array([1.0, 1.0]),
            name="x1+x2",
        ),
        h=cp.SmoothMap(
            value=lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 1.0]),
            jacobian=lambda x: np.array([[2.0 * x[0], 2.0 * x[1]]]),
            n=2, m=1, name="circle",
        ),
        C=co_set_nonpositive(),
    )


def infeasible_problem():
    # h(x) = x^2 + 1 can never reach the singleton {0}
    return co.ConstrainedProblem(
        objective=sm.SmoothFunction(
            value=lambda x: float(x[0]), gradient=lambda x: np.array([1.0]), name="x"
        ),
        h=cp.SmoothMap(
            value=lambda x: np.array([x[0] ** 2 + 1.0]),
            jacobian=lambda x: np.array([[2.0 * x[0]]]),
            n=1, m=1, name="x^2+1",
        ),
        C=cc.singleton([0.0]),
    )


CIRCLE_X = np.array([-np.sqrt(2) / 2, -np.sqrt(2) / 2])
CIRCLE_Y = np.array([1 / np.sqrt(2)])


# ---------------------------------------------------------------------------
# penalty family
# ---------------------------------------------------------------------------

def test_penalty_family_linear_instance():
    fam = co.penalty_family(linear_problem())
    assert fam.eval([1.0], 0.5) == pytest.approx(2.0)
    assert fam.grad([1.0], 0.5)[0] == pytest.approx(3.0)


def test_penalty_family_feasible_point_reduces_to_objective():
    p = circle_problem()
    fam = co.penalty_family(p)
    x = np.array([0.1, -0.3])
    assert fam.eval(x, 0.2) == pytest.approx(p.objective.value(x))
    assert np.allclose(fam.grad(x, 0.2), p.objective.gradient(x))


def test_penalty_family_gradient_matches_finite_differences():
    fam = co.penalty_family(circle_problem())
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.standard_normal(2) * 1.5
        mu = 10 ** rng.uniform(-2, 0)
        h = 1e-6 * (1 + np.linalg.norm(x))
        fd = np.empty(2)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd[i] = (fam.eval(x + e, mu) - fam.eval(x - e, mu)) / (2 * h)
        assert np.linalg.norm(fd - fam.grad(x, mu)) / max(1.0, np.linalg.norm(fd)) <= 1e-5


def test_penalty_family_equals_calculus_construction():
    # Build the same family through the composite/calculus route:
    # g(gamma, y) = gamma + indicator(y in C), H(x) = (phi(x), h(x)).
    p = circle_problem()
    indicator_fam = sm.infconv_smoother(
        cc.indicator_oracle(p.C), sm.kernel_quadratic()
    )
    lifted = sm.calculus_affine([[0.0, 1.0]], [0.0], indicator_fam)
    first_coord = sm.SmoothFunction(
        value=lambda z: float(z[0]), gradient=lambda z: np.array([1.0, 0.0]), name="gamma"
    )
    family_g = sm.calculus_sum_smooth(first_coord, lifted)
    H = cp.SmoothMap(
        value=lambda x: np.concatenate([[p.objective.value(x)], p.h.value(x)]),
        jacobian=lambda x: np.vstack([p.objective.gradient(x), p.h.jacobian(x)]),
        n=2, m=2, name="(phi,h)",
    )
    chained = cp.composite_family(
        cp.CompositeProblem(g=cc.zero_oracle(2), H=H, family_g=family_g)
    )
    direct = co.penalty_family(p)
    rng = np.random.default_rng(7)
    for _ in range(30):
        x = rng.standard_normal(2) * 2
        mu = 10 ** rng.uniform(-2, 0)
        value = direct.eval(x, mu)
        scale = 1.0 + abs(value)
        assert abs(chained.eval(x, mu) - value) <= 1e-12 * scale
        assert np.allclose(chained.grad(x, mu), direct.grad(x, mu), atol=1e-12 * scale)


# ---------------------------------------------------------------------------
# multiplier estimates
# ---------------------------------------------------------------------------

def test_multiplier_estimate_feasible_is_zero():
    p = circle_problem()
    assert np.allclose(co.multiplier_estimate(p, [0.1, -0.2], 0.5), 0.0)


def test_multiplier_estimate_singleton_scaling():
    p = infeasible_problem()
    x = np.array([1.0])
    mu = 0.25
    assert co.multiplier_estimate(p, x, mu)[0] == pytest.approx((1.0 + 1.0) / mu)


def test_multiplier_estimate_always_in_normal_cone():
    rng = np.random.default_rng(11)
    for p in (circle_problem(), linear_problem(), infeasible_problem()):
        for _ in range(20):
            x = rng.standard_normal(p.h.n) * 2
            mu = 10 ** rng.uniform(-3, 0)
            y = co.multiplier_estimate(p, x, mu)
            hx = p.h.value(x)
            rays = cc.normal_cone(p.C, cc.project(p.C, hx), tol=1e-9).rays
            assert cc.cone_distance(rays, y) <= 1e-9


# ---------------------------------------------------------------------------
# KKT reports
# ---------------------------------------------------------------------------

def test_kkt_report_analytic_point():
    report = co.kkt_report(circle_problem(), CIRCLE_X, CIRCLE_Y)
    assert report.stationarity_residual <= 1e-6
    assert report.feasibility_residual <= 1e-6
    assert report.cone_residual <= 1e-6
    assert report.classification == co.CLASS_KKT


def test_kkt_report_infeasible_point_with_zero_multiplier():
    report = co.kkt_report(circle_problem(), np.array([2.0, 0.0]), np.array([0.0]))
    assert report.feasibility_residual == pytest.approx(3.0)
    assert report.classification != co.CLASS_KKT


def test_kkt_report_perturbed_point():
    report = co.kkt_report(circle_problem(), CIRCLE_X + 1e-3, CIRCLE_Y)
    assert 0.0 < report.stationarity_residual < 1e-1


# ---------------------------------------------------------------------------
# infeasible stationarity and ECQ
# ---------------------------------------------------------------------------

def test_infeasible_stationarity_candidate_at_origin():
    report = co.infeasible_stationarity_check(infeasible_problem(), [0.0], tol=1e-6)
    assert report.is_candidate
    assert report.psi == pytest.approx(1.0)
    assert report.residual == pytest.approx(0.0, abs=1e-12)


def test_infeasible_stationarity_noncandidate():
    report = co.infeasible_stationarity_check(infeasible_problem(), [1.0], tol=1e-6)
    assert not report.is_candidate
    assert report.residual == pytest.approx(2.0)


def test_infeasible_stationarity_linear():
    report = co.infeasible_stationarity_check(linear_problem(), [1.0], tol=1e-6)
    assert not report.is_candidate
    assert report.residual == pytest.approx(1.0)


def test_infeasible_stationarity_rejects_feasible_input():
    with pytest.raises(ValueError):
        co.infeasible_stationarity_check(linear_problem(), [-1.0], tol=1e-6)


def test_ecq_fails_at_flat_infeasible_point():
    report = co.ecq_check(infeasible_problem(), [0.0])
    assert not report.holds


def test_ecq_holds_for_identity_constraint():
    p = linear_problem()
    for x in ([-1.0], [0.0], [2.0]):
        assert co.ecq_check(p, x).holds


def test_ecq_feasible_box_face():
    p = co.ConstrainedProblem(
        objective=sm.SmoothFunction(
            value=lambda x: float(x[0] + x[1]),
            gradient=lambda x: np.array([1.0, 1.0]),
            name="sum",
        ),
        h=cp.SmoothMap(
            value=lambda x: x.copy(), jacobian=lambda x: np.eye(2), n=2, m=2, name="id"
        ),
        C=cc.box([-1.0, -1.0], [1.0, 1.0]),
    )
    report = co.ecq_check(p, [1.0, 0.0])
    assert report.holds
    assert report.residual > 1e-8


# ---------------------------------------------------------------------------
# feasible guard
# ---------------------------------------------------------------------------

def test_guard_accepts_anchor_itself():
    p = circle_problem()
    assert co.feasible_guard(p, [0.0, -1.0], [0.0, -1.0], 0.5)


def test_guard_rejects_worse_candidate():
    p = circle_problem()
    assert not co.feasible_guard(p, [0.0, -1.0], [2.0, 2.0], 0.5)


def test_guard_requires_feasible_anchor():
    with pytest.raises(ValueError):
        co.feasible_guard(circle_problem(), [2.0, 2.0], [0.0, 0.0], 0.5)
