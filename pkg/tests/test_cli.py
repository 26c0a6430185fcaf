import json

import numpy as np
import pytest

from epismooth import cli
from epismooth.catalog import builtin_problem


def write_problem(tmp_path, name, doc=None):
    doc = doc if doc is not None else builtin_problem(name)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def read_summary(outdir, name):
    text = (outdir / f"{name}_summary.json").read_text(encoding="utf-8")
    return json.loads(text)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_circle_exit_zero_and_multiplier(tmp_path, capsys):
    path = write_problem(tmp_path, "circle_inequality")
    code = cli.main(["solve", str(path), "--outdir", str(tmp_path / "out")])
    assert code == 0
    summary = read_summary(tmp_path / "out", "circle_inequality")
    assert summary["classification"] == "kkt_point"
    assert summary["y"][0] == pytest.approx(0.7071, abs=1e-4)
    assert np.allclose(summary["x"], -np.sqrt(2) / 2, atol=1e-4)
    printed = capsys.readouterr().out
    assert json.loads(printed) == summary


def test_solve_infeasible_exit_three(tmp_path):
    path = write_problem(tmp_path, "infeasible_quadratic")
    code = cli.main(["solve", str(path), "--outdir", str(tmp_path / "out")])
    assert code == 3
    summary = read_summary(tmp_path / "out", "infeasible_quadratic")
    assert summary["classification"] == "infeasible_stationary"
    assert abs(summary["x"][0]) <= 1e-3


def test_solve_lasso_unconstrained(tmp_path):
    path = write_problem(tmp_path, "lasso_small")
    code = cli.main(["solve", str(path), "--outdir", str(tmp_path / "out")])
    assert code == 0
    summary = read_summary(tmp_path / "out", "lasso_small")
    assert np.allclose(summary["x"], [0.5, 0.0, 0.0], atol=1e-4)


def test_solve_malformed_json_exit_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{oops", encoding="utf-8")
    assert cli.main(["solve", str(path)]) == 2
    assert "error" in capsys.readouterr().err


def test_solve_schema_violation_exit_two(tmp_path, capsys):
    doc = builtin_problem("lasso_small")
    doc["surprise"] = True
    path = tmp_path / "bad_schema.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert cli.main(["solve", str(path)]) == 2


def test_trace_header_bit_exact(tmp_path):
    path = write_problem(tmp_path, "circle_inequality")
    cli.main(["solve", str(path), "--outdir", str(tmp_path / "out")])
    lines = (tmp_path / "out" / "circle_inequality_trace.csv").read_text().splitlines()
    assert lines[0] == "k,mu,grad_norm,eval,feas_residual,stat_residual,cone_residual,guard"
    assert len(lines) > 2


def test_solve_outputs_deterministic(tmp_path):
    path = write_problem(tmp_path, "circle_inequality")
    cli.main(["solve", str(path), "--outdir", str(tmp_path / "a")])
    cli.main(["solve", str(path), "--outdir", str(tmp_path / "b")])
    for suffix in ("trace.csv", "summary.json"):
        a = (tmp_path / "a" / f"circle_inequality_{suffix}").read_bytes()
        b = (tmp_path / "b" / f"circle_inequality_{suffix}").read_bytes()
        assert a == b


def test_solve_guard_flag_uses_feasible_point(tmp_path):
    path = write_problem(tmp_path, "circle_inequality")
    code = cli.main(["solve", str(path), "--guard", "--outdir", str(tmp_path / "out")])
    assert code == 0
    lines = (tmp_path / "out" / "circle_inequality_trace.csv").read_text().splitlines()
    assert all(row.endswith(",1") for row in lines[1:])


def test_solve_guard_rejected_for_unconstrained(tmp_path, capsys):
    path = write_problem(tmp_path, "lasso_small")
    assert cli.main(["solve", str(path), "--guard", "0,0,0"]) == 2


def test_solve_flag_overrides(tmp_path):
    path = write_problem(tmp_path, "circle_inequality")
    code = cli.main([
        "solve", str(path), "--mu0", "0.5", "--rho", "0.4", "--kmax", "25",
        "--tol", "1e-5", "--outdir", str(tmp_path / "out"),
    ])
    assert code == 0
    lines = (tmp_path / "out" / "circle_inequality_trace.csv").read_text().splitlines()
    first = lines[1].split(",")
    assert float(first[1]) == 0.5


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def test_verify_kernels_exit_zero(tmp_path):
    out = tmp_path / "kernels.jsonl"
    assert cli.main(["verify", "kernels", "--seed", "7", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    entries = [json.loads(line) for line in lines]
    assert all(e["ok"] for e in entries)
    controls = [e for e in entries if e["required_failure"]]
    assert controls and all(not e["passed"] for e in controls)


def test_verify_unknown_suite_exit_two(capsys):
    assert cli.main(["verify", "everything"]) == 2


def test_verify_seed_env_override(tmp_path, monkeypatch):
    out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    monkeypatch.setenv("EPISMOOTH_SEED", "11")
    cli.main(["verify", "kernels", "--out", str(out1)])
    monkeypatch.delenv("EPISMOOTH_SEED")
    cli.main(["verify", "kernels", "--seed", "11", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


# ---------------------------------------------------------------------------
# prox
# ---------------------------------------------------------------------------

def test_prox_one_norm(capsys):
    assert cli.main(["prox", "one_norm", "--x", "2,-0.5,-3", "--mu", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert np.allclose(out["prox"], [1.0, 0.0, -2.0])


def test_prox_box_indicator_is_projection(capsys):
    code = cli.main([
        "prox", "box_indicator", "--x", "2,-1", "--mu", "0.5",
        "--lo", "0,0", "--hi", "1,1",
    ])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert np.allclose(out["prox"], [1.0, 0.0])
    assert out["envelope_value"] == pytest.approx((1.0 + 1.0) / (2 * 0.5))


def test_prox_huber_envelope_matches_closed_form(capsys):
    assert cli.main(["prox", "huber", "--x", "2", "--mu", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    # envelope of the huber penalty at 2 with mu = 1: sup_|u|<=1 2u - u^2 = 1
    assert out["envelope_value"] == pytest.approx(1.0, abs=1e-9)


def test_prox_unknown_function(capsys):
    assert cli.main(["prox", "mystery", "--x", "1"]) == 2


def test_prox_bad_vector(capsys):
    assert cli.main(["prox", "one_norm", "--x", "a,b"]) == 2


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def test_catalog_lists_builtins(capsys):
    assert cli.main(["catalog"]) == 0
    out = capsys.readouterr().out
    assert "lasso_small" in out
    assert len(out.strip().splitlines()) >= 5
