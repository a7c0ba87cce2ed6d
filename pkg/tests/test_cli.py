import json
import subprocess
import sys
from pathlib import Path

import pytest

from mjpreward.cli import main

MODEL_DIR = Path(__file__).resolve().parents[1] / "model_files"


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def two_state_doc(r1=0.0, rate_expr="1"):
    return {
        "name": "two",
        "period": 1.0,
        "model": {"states": 2, "rates": [{"from": 0, "to": 1, "expr": rate_expr}, {"from": 1, "to": 0, "expr": 1}]},
        "rewards": {"rate": [{"state": 0, "expr": 1}, {"state": 1, "expr": r1}]},
        "bounds": {"lambda_bar": [1.0, 1.0]},
    }


# ---------------------------------------------------------------- oracles


def test_moments_symmetric_two_state(capsys, tmp_path):
    out = tmp_path / "m.csv"
    code = main(["moments", "--config", "symmetric_two_state", "--t", "1", "--method", "dopri54", "--rtol", "1e-11", "--atol", "1e-13", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "E R(t) = 0.716166" in text
    data = out.read_bytes()
    assert b"\r" not in data
    assert data.splitlines()[0] == b"s,m_0,m_1,v_0,v_1,V"


def test_moments_zero_reward(capsys, tmp_path):
    cfg = write(tmp_path, "zero.json", two_state_doc() | {"rewards": {"rate": [{"state": "all", "expr": 0}]}})
    assert main(["moments", "--config", cfg, "--t", "2"]) == 0
    assert capsys.readouterr().out.splitlines() == ["E R(t) = 0", "Var R(t) = 0"]


def test_periodic_symmetric(capsys):
    assert main(["periodic", "--config", "symmetric_two_state", "--grid", "64"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["alpha"] == pytest.approx(0.5, abs=1e-10)
    assert doc["sigma2"] == pytest.approx(0.25, abs=1e-6)
    assert doc["seam_residual"] <= 1e-7
    assert list(doc) == sorted(doc)


def test_mixing_symmetric(capsys, tmp_path):
    out = tmp_path / "tv.csv"
    assert main(["mixing", "--config", "symmetric_two_state", "--umax", "2", "--step", "0.5", "--method", "dopri54", "--rtol", "1e-12", "--atol", "1e-14", "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()]
    assert rows[0] == ["u", "tv"]
    tv = {float(u): float(v) for u, v in rows[1:]}
    assert tv[1.0] == pytest.approx(0.270671, abs=1e-6)
    vals = [float(v) for _, v in rows[1:]]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_mixing_single_state(capsys):
    assert main(["mixing", "--config", "poisson", "--umax", "1", "--step", "0.5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [float(line.split()[1]) for line in lines] == [0.0, 0.0]


# ---------------------------------------------------------------- validate


def test_validate_shipped_file(capsys):
    assert main(["validate", "--config", str(MODEL_DIR / "prendiville.json")]) == 0
    assert "model is valid" in capsys.readouterr().out


def test_validate_disconnected(capsys, tmp_path):
    doc = two_state_doc()
    doc["model"]["rates"] = doc["model"]["rates"][:1]
    assert main(["validate", "--config", write(tmp_path, "d.json", doc)]) == 1
    assert "FAIL A2" in capsys.readouterr().out


def test_validate_log_domain(capsys, tmp_path):
    assert main(["validate", "--config", write(tmp_path, "l.json", two_state_doc(rate_expr="log(t)"))]) == 1
    out = capsys.readouterr().out
    assert "log" in out and "t=0" in out


def test_unknown_key_is_invalid_model(capsys, tmp_path):
    assert main(["validate", "--config", write(tmp_path, "u.json", two_state_doc() | {"colour": "red"})]) == 1
    assert "colour" in capsys.readouterr().err


# ---------------------------------------------------------------- simulate / coverage / reset


def test_simulate_deterministic_across_workers(capsys, tmp_path):
    pp = tmp_path / "paths.csv"
    assert main(["simulate", "--config", "poisson", "--t", "4", "--paths", "500", "--seed", "3", "--workers", "1", "--per-path", str(pp)]) == 0
    a = capsys.readouterr().out
    assert main(["simulate", "--config", "poisson", "--t", "4", "--paths", "500", "--seed", "3", "--workers", "2"]) == 0
    b = capsys.readouterr().out
    assert a == b
    doc = json.loads(a)
    assert {"mean", "variance", "se_mean", "se_variance", "n_paths"} <= set(doc)
    assert abs(doc["mean"] - 8) <= 4 * doc["se_mean"]
    lines = pp.read_text().splitlines()
    assert lines[0] == "path_index,R,integrated,jump,scheduled,external" and len(lines) == 501


def test_coverage_csv(capsys, tmp_path):
    out = tmp_path / "cov.csv"
    args = ["coverage", "--config", "periodic_two_state", "--times", "2,4", "--levels", "0.1,0.5,0.9", "--paths", "500", "--seed", "1", "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,p,quantile,coverage,ci_halfwidth" and len(lines) == 7


def test_coverage_empty_levels(capsys):
    assert main(["coverage", "--config", "poisson", "--times", "4", "--levels", "", "--paths", "10"]) == 3


def test_reset_csv(capsys, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["reset", "--config", "periodic_two_state", "--periods", "8", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "period,E_delta,Var_delta,E_cum,Var_cum" and len(lines) == 9


# ---------------------------------------------------------------- exit codes


def test_non_periodic_model_rejected(capsys):
    assert main(["periodic", "--config", "prendiville"]) == 1
    assert "period" in capsys.readouterr().err


def test_bound_violation_is_numerical_failure(capsys, tmp_path):
    cfg = write(tmp_path, "b.json", two_state_doc(rate_expr="2"))
    assert main(["simulate", "--config", cfg, "--t", "5", "--paths", "100"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["moments", "--config", "poisson"],
        ["moments", "--config", "poisson", "--t", "1", "--method", "rk3"],
        ["moments", "--config", "no/such/file.json", "--t", "1"],
        ["moments", "--config", "poisson", "--t", "1", "--h", "0"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        sys.exit(main(argv))
    assert info.value.code == 3


def test_outputs_are_byte_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["moments", "--config", "prendiville", "--t", "1", "--h", "0.01", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    first = a.read_text().splitlines()[1].split(",")
    assert all(float(v) == float(repr(float(v))) for v in first)


def test_console_script_timing_on_stderr():
    res = subprocess.run(
        [sys.executable, "-m", "mjpreward.cli", "moments", "--config", "poisson", "--t", "4"],
        capture_output=True,
        text=True,
        env={"MJP_LOG": "info", "PATH": ""},
    )
    assert res.returncode == 0
    assert "elapsed" in res.stderr and "elapsed" not in res.stdout
    assert res.stdout.splitlines()[0] == "E R(t) = 8"
