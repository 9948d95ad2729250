import json

import pytest

from descflow.cli import (EXIT_CONFIG, EXIT_OK, EXIT_PROPERTY, ConfigError, analytic_eigenvalue,
                          load_config, main)
from descflow.suites import PROPERTIES
from reference import LAMBDA1_P3, PI2


def _ini(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


def test_defaults():
    cfg = load_config()
    assert cfg.problem.p == 2.0 and cfg.problem.n == 199
    assert cfg.problem.lambda_fraction == 0.5
    assert cfg.verify.properties == PROPERTIES


def test_file_and_overrides(tmp_path):
    path = _ini(tmp_path, "[problem]\np = 3\nlambda = 4.5\n[flow]\neps_crit = 1e-9\n"
                          "[output]\ntrace_stride = 5\n[verify]\nproperties = all\n")
    cfg = load_config(path, ["problem.n=51", "multistart.n_theta=32"])
    assert cfg.problem.p == 3.0 and cfg.problem.lam == 4.5 and cfg.problem.n == 51
    assert cfg.flow.eps_crit == 1e-9 and cfg.flow.stride == 5
    assert cfg.multistart.n_theta == 32
    assert cfg.verify.properties == PROPERTIES


@pytest.mark.parametrize("overrides", [
    ["problem.p=1"], ["problem.lambda_fraction=1.2"], ["problem.lambda_fraction=0"],
    ["problem.n=1"], ["problem.potential=cubic"], ["problem.color=3"], ["colors.p=2"],
    ["problem.p"], ["problem.n=many"], ["flow.eps_crit=-1"], ["verify.properties=bogus"],
    ["output.formats=xml"], ["multistart.n_theta=2"],
])
def test_config_errors(overrides):
    with pytest.raises(ConfigError):
        load_config(None, overrides)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.ini")


def test_analytic_eigenvalue():
    assert analytic_eigenvalue(2.0, 1.0) == pytest.approx(PI2)
    assert analytic_eigenvalue(3.0, 1.0) == pytest.approx(LAMBDA1_P3)
    assert analytic_eigenvalue(2.0, 1.0, 2) == pytest.approx(4 * PI2)


def test_eigen_command(tmp_path, capsys):
    assert main(["eigen", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "eigen.json").read_text())
    assert rep["lambda1"]["rel_error"] < 1e-3
    assert rep["lambda2"]["rel_error"] < 1e-2
    assert (tmp_path / "u1.csv").exists() and (tmp_path / "u2.csv").exists()
    assert "lambda1_h" in capsys.readouterr().out


def test_eigen_p3_fine_mesh(tmp_path):
    assert main(["eigen", "--set", "problem.p=3", "--set", "problem.n=399", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "eigen.json").read_text())
    assert abs(rep["lambda1"]["value"] - LAMBDA1_P3) / LAMBDA1_P3 < 1e-3


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["eigen", "--set", "problem.p=1", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["solve", "--set", "problem.lambda_fraction=1.2", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["solve", "--set", "problem.lambda=50", "--set", "problem.n=20",
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_empty_verify_is_noop(tmp_path):
    assert main(["verify", "--set", "verify.properties=", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["properties"] == [] and doc["passed"]


def test_verify_flags_broken_potential(tmp_path):
    path = _ini(tmp_path, "[problem]\nn = 49\npotential = custom_piecewise\nbreakpoints = (0,)\n"
                          "pieces = ((1, 0, 0, 1), (-1, 0, 0, 1))\n"
                          "[flow]\nmax_steps = 500\n[verify]\nproperties = cone_invariance\nstarts = 10\n")
    assert main(["verify", "-c", path, "--out", str(tmp_path)]) == EXIT_PROPERTY
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["properties"][0]["name"] == "cone_invariance"
    assert not doc["properties"][0]["passed"]


def test_verify_flow_suites_pass(tmp_path):
    props = "energy_monotone,cone_invariance,cone_negative_control,gradient_consistency"
    assert main(["verify", "--set", f"verify.properties={props}", "--set", "problem.n=49",
                 "--out", str(tmp_path)]) == EXIT_OK


def test_flow_trace(tmp_path, capsys):
    code = main(["flow-trace", "--set", "problem.n=49", "--start", "u1", "--scale", "0.5",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "status=reached_origin_basin" in capsys.readouterr().out
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "t,phi,residual,min_u,max_u" and len(lines) > 2
    assert json.loads((tmp_path / "trace.json").read_text())["status"] == "reached_origin_basin"
    u1 = tmp_path / "u1.csv"
    main(["eigen", "--set", "problem.n=49", "--out", str(tmp_path)])
    assert main(["flow-trace", "--set", "problem.n=49", "--start", f"csv:{u1}", "--scale", "30",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert main(["flow-trace", "--start", "u3", "--out", str(tmp_path)]) == EXIT_CONFIG
