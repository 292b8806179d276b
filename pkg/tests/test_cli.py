import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ellreg import cli
from ellreg.estimators import fit_gls
from ellreg.model import RegressionProblem


def run(argv):
    out = io.StringIO()
    code = cli.main(argv, out=out)
    return code, out.getvalue()


def write(path, array):
    np.savetxt(path, np.atleast_2d(array), delimiter=",", fmt="%.17g")
    return str(path)


@pytest.fixture
def toy(tmp_path):
    rng = np.random.default_rng(17)
    n, p = 20, 5
    X = rng.standard_normal((n, p))
    y = X @ np.arange(1.0, p + 1) + rng.standard_normal(n)
    H = np.hstack([np.eye(3), np.zeros((3, 2))])
    files = {
        "x": write(tmp_path / "x.csv", X),
        "y": write(tmp_path / "y.csv", y[:, None]),
        "H": write(tmp_path / "H.csv", H),
        "h": write(tmp_path / "h.csv", np.zeros(3)),
    }
    return files, X, y, H


def base_args(files, h_key="h"):
    return ["--x", files["x"], "--y", files["y"], "--h-matrix", files["H"], "--h-vector", files[h_key]]


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_fit_outputs_everything(toy):
    files, *_ = toy
    code, text = run(["fit", *base_args(files)])
    assert code == 0
    names = {(r["section"], r["name"]) for r in rows_of(text)}
    for est in ("beta_gls", "beta_restricted", "beta_pt", "beta_s", "beta_prs"):
        assert ("estimate", est) in names
    for stat in ("s2", "s_star2", "L_n", "F_alpha", "d"):
        assert ("statistic", stat) in names


def test_fit_coinciding_when_restriction_holds(toy, tmp_path):
    files, X, y, H = toy
    beta = fit_gls(RegressionProblem(X, y=y))
    files["h_exact"] = write(tmp_path / "h_exact.csv", H @ beta)
    code, text = run(["fit", *base_args(files, "h_exact"), "--format", "json"])
    assert code == 0
    payload = json.loads(text)
    groups = [set(g.split("=")) for g in payload["coinciding"]]
    assert any({"restricted", "pt", "prs"} <= g for g in groups)
    np.testing.assert_allclose(payload["estimates"]["beta_pt"], payload["estimates"]["beta_restricted"])


def test_fit_q_two_unsupported(toy, tmp_path):
    files, *_ = toy
    files["H2"] = write(tmp_path / "H2.csv", np.eye(5)[:2])
    files["h2"] = write(tmp_path / "h2.csv", np.zeros(2))
    args = ["--x", files["x"], "--y", files["y"], "--h-matrix", files["H2"], "--h-vector", files["h2"]]
    code, text = run(["fit", *args])
    assert code == 0
    values = {r["name"]: r["value"] for r in rows_of(text) if r["section"] == "estimate"}
    assert values["beta_s"] == "unsupported (q >= 3)"
    assert values["beta_prs"] == "unsupported (q >= 3)"


def test_malformed_csv_diagnostics(toy, tmp_path, capsys):
    files, *_ = toy
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3,4,5\n1,2,oops,4,5\n")
    code, _ = run(["fit", *base_args(files), "--x", str(bad)])
    assert code == 2
    err = capsys.readouterr().err
    assert "row 2" in err and "column 3" in err
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n1\n")
    assert run(["fit", *base_args(files), "--x", str(ragged)])[0] == 2
    assert "row 2 has 1 columns" in capsys.readouterr().err


def test_header_flag(toy, tmp_path):
    files, X, y, H = toy
    for key in ("x", "y", "H", "h"):
        path = tmp_path / f"hdr_{key}.csv"
        path.write_text("label\n" + open(files[key]).read())
        files[key] = str(path)
    assert run(["fit", *base_args(files), "--header"])[0] == 0


def test_validation_errors_exit_two(toy, capsys):
    files, *_ = toy
    assert run(["fit", *base_args(files), "--h-matrix", files["x"]])[0] == 2
    assert run(["risk", "--family", "t"])[0] == 2
    assert "--gamma" in capsys.readouterr().err


def test_risk_null_report():
    code, text = run(["risk", "--sigma2", "2.5", "--delta2", "0"])
    assert code == 0
    risks = {r["name"]: float(r["value"]) for r in rows_of(text) if r["section"] == "risk"}
    assert risks["restricted"] == pytest.approx(risks["gls"] - 2.5 * 4, rel=1e-12)


def test_risk_json_schema():
    code, text = run(["risk", "--family", "t", "--gamma", "5", "--delta2", "3", "--format", "json", "--weight", "identity"])
    payload = json.loads(text)
    assert set(payload) == {"meta", "risks", "biases", "thresholds"}
    assert set(payload["risks"]) == {"gls", "restricted", "pt", "stein", "prs"}
    assert payload["meta"]["delta_star2"] == pytest.approx(3.0)


def test_plugin_sigma2(toy):
    files, *_ = toy
    code, text = run(["risk", *base_args(files), "--plugin-s2"])
    meta = {r["name"]: r["value"] for r in rows_of(text) if r["section"] == "meta"}
    assert code == 0 and meta["sigma2_plugin"] == "true"


def test_sweep_default_grid_schema():
    code, text = run(["sweep", "--reps", "0"])
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0].split(",") == cli.SWEEP_COLUMNS
    assert len(lines) == 43


def test_sweep_is_byte_identical():
    args = ["sweep", "--grid", "0,2", "--reps", "1500", "--seed", "4"]
    assert run(args)[1] == run(args)[1]
    payload = json.loads(run(args + ["--format", "json"])[1])
    assert payload["columns"] == cli.SWEEP_COLUMNS
    assert [set(r) <= set(cli.SWEEP_COLUMNS) for r in payload["rows"]] == [True, True]


def test_verify_default_passes():
    code, text = run(["verify"])
    assert code == 0, text
    assert all(r["passed"] == "true" for r in rows_of(text))


def test_verify_reports_failure(monkeypatch):
    monkeypatch.setattr(cli, "run_verify", lambda *a, **k: [("forced", False, "")])
    assert run(["verify"])[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ellreg", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "fit" in proc.stdout
