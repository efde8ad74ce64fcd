import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from robust_treat.cli import main
from robust_treat.rules import rule_from_dict

STOYE_10 = ["--model", "stoye", "--mu-bar", "1", "--sigma", "1", "--k", "10"]
STOYE_05 = ["--model", "stoye", "--mu-bar", "1", "--sigma", "1", "--k", "0.5"]
EVIDENCE = ["--model", "evidence", "--x0", "0", "--site", "0.5:1", "--site=-0.5:1", "--C", "1", "--mu-bar=0.3,-0.1"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_case_two(capsys):
    code, out, _ = run(capsys, "solve", *STOYE_10)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == "1.0"
    assert doc["mmr"]["regime"] == "CaseII" and abs(doc["mmr"]["value"] - 4.95) <= 1e-12
    assert doc["agreement"] == {"with_randomization": False, "without_randomization": False}
    assert doc["per"]["randomized_rule"]["type"] == "two_step"


def test_solve_case_one(capsys):
    code, out, _ = run(capsys, "solve", *STOYE_05)
    doc = json.loads(out)
    assert code == 0 and doc["mmr"]["regime"] == "CaseI"
    rules = doc["mmr"]["rules"]
    assert len(rules) == 1 and rule_from_dict(rules[0]["rule"]).c == 0.0


def test_solve_degenerate(capsys):
    code, out, err = run(capsys, "solve", "--model", "stoye", "--mu-bar", "0", "--sigma", "1", "--k", "1")
    assert code == 2 and out == "" and "mu_bar must be nonzero" in err


@pytest.mark.parametrize("argv", [
    ["solve"],
    ["solve", "--model", "stoye", "--mu-bar", "1"],
    ["solve", "--spec", "/nonexistent.json"],
    ["solve", "--model", "stoye", "--mu-bar", "1", "--sigma", "-1", "--k", "1"],
    ["solve", "--model", "evidence", "--x0", "0", "--site", "0.5:1", "--site=-0.5:1", "--C", "0", "--mu-bar=0.3,-0.1"],
    ["nope"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_spec_file(tmp_path, capsys):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"model": "stoye", "mu_bar": 1.0, "sigma": 1.0, "k": 10.0}))
    code, out, _ = run(capsys, "solve", "--spec", str(path))
    assert code == 0 and json.loads(out)["mmr"]["value"] == 4.95
    assert run(capsys, "solve", "--spec", str(path), *STOYE_10)[0] == 2
    path.write_text(json.dumps({"model": "stoye", "mu_bar": 1.0}))
    assert run(capsys, "solve", "--spec", str(path))[0] == 2


def test_spec_round_trip_through_output(tmp_path, capsys):
    _, out, _ = run(capsys, "solve", *EVIDENCE)
    path = tmp_path / "again.json"
    path.write_text(json.dumps(json.loads(out)["spec"]))
    _, again, _ = run(capsys, "solve", "--spec", str(path))
    assert again == out


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_rule_curve_levels(capsys):
    code, out, _ = run(capsys, "rule-curve", *STOYE_10, "--rule", "step,per", "--rule", "w0", "--points", "9")
    assert code == 0
    rows = _csv(out)
    assert list(rows[0]) == ["y", "step", "per", "w0"]
    assert {round(float(r["step"]), 6) for r in rows} == {0.42676, 0.57324}
    for r in rows:
        y = float(r["y"])
        assert float(r["per"]) == (0.55 if y >= 0 else 0.45)
        assert float(r["w0"]) == (1.0 if y >= 0 else 0.0)


def test_rule_curve_multivariate_index(capsys):
    code, out, _ = run(capsys, "rule-curve", *EVIDENCE, "--rule", "w0", "--points", "5")
    rows = _csv(out)
    assert code == 0 and [float(r["w0"]) for r in rows] == [0, 0, 1, 1, 1]


def test_rule_curve_unknown_label(capsys):
    code, _, err = run(capsys, "rule-curve", *STOYE_05, "--rule", "rt")
    assert code == 2 and "unknown rule" in err


def test_profiled_regret_curve(capsys):
    code, out, _ = run(capsys, "profiled-regret", "--model", "stoye", "--mu-bar", "0.3", "--sigma", "1", "--k", "2",
                       "--rule", "per,linear", "--mu-min", "0", "--mu-max", "5", "--points", "501")
    assert code == 0
    rows = _csv(out)
    assert list(rows[0]) == ["mu", "value_per", "value_linear"]
    per = np.array([float(r["value_per"]) for r in rows])
    assert per[0] == 1.0 and np.all(np.diff(per) > 0)


def test_profiled_regret_defaults_are_finite(capsys):
    code, out, _ = run(capsys, "profiled-regret", *STOYE_10)
    rows = _csv(out)
    assert code == 0 and float(rows[0]["mu"]) == -50.0 and float(rows[-1]["mu"]) == 50.0
    assert all(np.isfinite(float(v)) for r in rows for v in r.values())


def test_profiled_regret_rejects_evidence(capsys):
    assert run(capsys, "profiled-regret", *EVIDENCE)[0] == 2


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", *STOYE_10, "--mc-draws", "200000")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert all({"label", "check", "passed", "residual", "tol"} <= set(c) for c in doc["checks"])


def test_verify_evidence(capsys):
    code, out, _ = run(capsys, "verify", *EVIDENCE, "--mc-draws", "200000", "--skip-minimax")
    assert code == 0 and json.loads(out)["passed"]


def test_verify_negative_control(capsys):
    code, out, err = run(capsys, "verify", *STOYE_10, "--skip-minimax", "--mc-draws", "10000",
                         "--perturb-sigma-tilde", "1e-3")
    assert code == 1 and "FAIL rt/moment_conditions" in err
    assert not json.loads(out)["passed"]


def test_output_is_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(capsys, "verify", *STOYE_10, "--skip-minimax", "--mc-draws", "20000", "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_env_overrides_flag(tmp_path, capsys, monkeypatch):
    def seeded(seed_flag):
        p = tmp_path / f"s{seed_flag}.json"
        run(capsys, "verify", *STOYE_10, "--skip-minimax", "--mc-draws", "20000", "--seed", seed_flag, "--out", str(p))
        return json.loads(p.read_text())
    assert seeded("1")["checks"] != seeded("2")["checks"]
    monkeypatch.setenv("ROBUST_TREAT_SEED", "7")
    x, y = seeded("1"), seeded("2")
    assert x["seed"] == y["seed"] == 7 and x == y
    monkeypatch.setenv("ROBUST_TREAT_SEED", "abc")
    assert run(capsys, "verify", *STOYE_10, "--skip-minimax")[0] == 2


def test_json_numbers_round_trip(capsys):
    from robust_treat.model import make_stoye
    from robust_treat.solver_mmr import solve_mmr
    _, out, _ = run(capsys, "solve", *STOYE_10)
    doc = json.loads(out)
    consts = solve_mmr(make_stoye(1.0, 1.0, 10.0)).constants
    for key in ("sigma_tilde", "rho_star", "beta_star", "c_star"):
        assert doc["mmr"]["constants"][key] == consts[key]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "robust_treat", "solve", *STOYE_05],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["mmr"]["regime"] == "CaseI"
