import numpy as np
import pytest

from epismooth import catalog as cat
from epismooth import convex_core as cc


def minimal_doc(**extra):
    doc = {"name": "toy", "n": 2, "objective": "x1^2 + x2^2"}
    doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# schema validation
# ---------------------------------------------------------------------------

def test_minimal_document_validates():
    cat.validate_problem_document(minimal_doc())


def test_unknown_top_level_field_rejected():
    with pytest.raises(cat.ProblemFileError):
        cat.validate_problem_document(minimal_doc(misc=1))


def test_missing_required_fields_rejected():
    with pytest.raises(cat.ProblemFileError):
        cat.validate_problem_document({"name": "x", "n": 1})


def test_constraints_require_set_and_vice_versa():
    with pytest.raises(cat.ProblemFileError):
        cat.validate_problem_document(minimal_doc(constraints=["x1"]))
    with pytest.raises(cat.ProblemFileError):
        cat.validate_problem_document(
            minimal_doc(set={"type": "nonneg_orthant", "m": 1})
        )


def test_unknown_solver_field_rejected():
    with pytest.raises(cat.ProblemFileError):
        cat.validate_problem_document(minimal_doc(solver={"step": 0.1}))


def test_set_descriptor_round_trips():
    s = cat.convex_set_from_descriptor(
        {"type": "box", "lo": [0.0, "-inf"], "hi": [1.0, "inf"]}
    )
    assert s.kind == "box"
    assert s.lo[1] == -np.inf and s.hi[1] == np.inf
    with pytest.raises(cat.ProblemFileError):
        cat.convex_set_from_descriptor({"type": "cube", "side": 1})
    with pytest.raises(cat.ProblemFileError):
        cat.convex_set_from_descriptor({"type": "box", "lo": [0], "hi": [1], "x": 2})


def test_load_problem_file_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(cat.ProblemFileError):
        cat.load_problem_file(path)


# ---------------------------------------------------------------------------
# building problems
# ---------------------------------------------------------------------------

def test_build_unconstrained_problem():
    built = cat.build_problem(minimal_doc())
    assert built.constrained is None
    x = np.array([1.0, -1.0])
    assert built.family.eval(x, 0.5) == pytest.approx(2.0)
    assert np.allclose(built.family.grad(x, 0.1), [2.0, -2.0])


def test_build_constrained_problem_dimensions_checked():
    doc = minimal_doc(
        constraints=["x1 + x2"],
        set={"type": "nonneg_orthant", "m": 2},
    )
    with pytest.raises(cat.ProblemFileError):
        cat.build_problem(doc)


def test_build_applies_solver_overrides():
    built = cat.build_problem(
        minimal_doc(solver={"mu0": 0.1, "rho": 0.25, "k_max": 7, "x0": [1.0, 1.0]})
    )
    assert built.config.mu0 == 0.1
    assert built.config.rho == 0.25
    assert built.config.k_max == 7
    assert np.allclose(built.x0, [1.0, 1.0])


def test_regularizer_scaling_matches_direct_weighting():
    fam = cat.regularizer_family({"type": "one_norm", "weight": 0.5}, 2)
    direct = cc.one_norm_oracle(2, weight=0.5)
    x = np.array([0.8, -0.1])
    mu = 0.3
    w = direct.prox(x, mu)
    expected = direct.value(w) + np.sum((w - x) ** 2) / (2 * mu)
    assert fam.eval(x, mu) == pytest.approx(expected, abs=1e-12)


def test_scaled_eplq_matches_weighted_values():
    spec = cat.scale_eplq(cc.huber_eplq(2, kappa=1.0), 2.0)
    plain = cc.huber_eplq(2, kappa=1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.standard_normal(2) * 2
        scaled, _ = cc.eplq_value(spec, x)
        base, _ = cc.eplq_value(plain, x)
        assert scaled == pytest.approx(2.0 * base, abs=1e-7)


def test_custom_eplq_regularizer_dimension_checked():
    doc = {
        "type": "custom_eplq", "weight": 1.0,
        "U": {"type": "box", "lo": [0.0], "hi": [1.0]},
        "B": [[0.0]], "R": [[1.0]], "b": [0.0],
    }
    fam = cat.regularizer_family(doc, 1)
    assert fam.eval(np.array([2.0]), 1e-6) == pytest.approx(2.0, abs=1e-4)
    with pytest.raises(cat.ProblemFileError):
        cat.regularizer_family(doc, 2)


# ---------------------------------------------------------------------------
# built-ins
# ---------------------------------------------------------------------------

def test_builtin_catalog_contents():
    assert len(cat.BUILTIN_PROBLEMS) >= 5
    assert "lasso_small" in cat.BUILTIN_PROBLEMS
    for name, doc in cat.BUILTIN_PROBLEMS.items():
        cat.validate_problem_document(doc)
        assert name in cat.PROBLEM_DESCRIPTIONS


def test_builtin_problems_build():
    for name in cat.BUILTIN_PROBLEMS:
        built = cat.build_problem(cat.builtin_problem(name))
        value = built.family.eval(built.x0, 1.0)
        assert np.isfinite(value)


def test_builtin_problem_returns_copy():
    doc = cat.builtin_problem("lasso_small")
    doc["n"] = 99
    assert cat.BUILTIN_PROBLEMS["lasso_small"]["n"] == 3
    with pytest.raises(KeyError):
        cat.builtin_problem("no_such_problem")


def test_vapnik_regression_family_is_correct():
    built = cat.build_problem(cat.builtin_problem("vapnik_regression_small"))
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    c = np.array([0.3, -0.2, 0.55])
    eps = 0.1

    def true_value(x):
        r = A @ x - c
        return 0.05 * float(x @ x) + float(np.maximum(np.abs(r) - eps, 0.0).sum())

    rng = np.random.default_rng(5)
    for _ in range(10):
        x = rng.standard_normal(2)
        assert built.family.eval(x, 1e-7) == pytest.approx(true_value(x), abs=1e-4)


# ---------------------------------------------------------------------------
# prox catalog
# ---------------------------------------------------------------------------

def test_prox_catalog_names():
    for name in cat.PROX_FUNCTIONS:
        oracle = cat.prox_oracle(name, 2)
        assert oracle.prox is not None
    with pytest.raises(KeyError):
        cat.prox_oracle("squiggle", 2)


def test_prox_box_indicator_projection():
    oracle = cat.prox_oracle("box_indicator", 2, lo=[0.0, 0.0], hi=[1.0, 1.0])
    assert np.allclose(oracle.prox(np.array([2.0, -1.0]), 0.7), [1.0, 0.0])
