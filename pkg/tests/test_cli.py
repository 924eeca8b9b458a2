import json
import math
import subprocess
import sys

import pytest

from quenchsplit.cli import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK, RunConfig, cli_main
from quenchsplit.errors import InvalidArgument

PROBLEM = {"a": math.sqrt(2.0), "N": 19, "grid": {"kind": "uniform"}, "nonlinearity": "kawarada", "delta": 0.1}

CONFIGS = {
    "run": {"problem": PROBLEM, "run": {"oracle": True, "oracle_save_every": 50}},
    "converge-time": {"problem": PROBLEM, "converge-time": {"t_star": 0.25, "levels": 3}},
    "converge-space": {"problem": {**PROBLEM, "N": 9}, "converge-space": {"t_star": 0.25, "levels": 3, "delta": 1e-3}},
    "critical-a": {"critical-a": {"bracket": [0.5, 1.2], "N": 19, "tol_a": 0.05, "delta": 0.02}},
    "validate": {"validate": {"N_list": [3, 5], "n_random": 10}},
}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _outputs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.mark.parametrize("mode", sorted(CONFIGS))
def test_every_mode_is_deterministic(tmp_path, mode):
    cfg = _write(tmp_path, CONFIGS[mode])
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert cli_main([mode, "--config", cfg, "--out", str(out1)]) == EXIT_OK
    assert cli_main([mode, "--config", cfg, "--out", str(out2)]) == EXIT_OK
    first = _outputs(out1)
    assert first
    assert first == _outputs(out2)


def test_run_outputs(tmp_path):
    cfg = _write(tmp_path, CONFIGS["run"])
    assert cli_main(["run", "--config", cfg, "--out", str(tmp_path / "r")]) == EXIT_OK
    assert set(_outputs(tmp_path / "r")) == {"trajectory.csv", "summary.json", "oracle.csv"}
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())["summary"]
    assert summary["quenched"] is True
    assert set(summary) >= {"quenched", "quench_time", "steps", "tau0", "bound_Sigma_tau", "violations"}
    header = (tmp_path / "r" / "trajectory.csv").read_text().splitlines()[0]
    assert header == "k,t,tau,max_U,residual,kappa_ratio,bound_margin,monotone_ok"


def test_validate_without_config(tmp_path):
    assert cli_main(["validate", "--out", str(tmp_path / "v")]) == EXIT_OK
    report = json.loads((tmp_path / "v" / "validation.json").read_text())
    assert len(report["cases"]) == 23


def test_structure_violation_exits_one_with_partial_output(tmp_path):
    cfg = _write(tmp_path, {"problem": {**PROBLEM, "N": 99}})
    assert cli_main(["run", "--config", cfg, "--out", str(tmp_path / "r")]) == EXIT_FAIL
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())["summary"]
    assert summary["status"] == "structure-violation"


def test_inconclusive_exits_two(tmp_path):
    cfg = _write(tmp_path, {"critical-a": {"N": 19, "budget_time": 0.01, "tol_a": 0.1}})
    assert cli_main(["critical-a", "--config", cfg, "--out", str(tmp_path / "c")]) == EXIT_INCONCLUSIVE
    doc = json.loads((tmp_path / "c" / "critical_a.json").read_text())
    assert doc["inconclusive_a"] == 0.5


def test_bad_bracket_exits_one(tmp_path):
    cfg = _write(tmp_path, {"critical-a": {"bracket": [1.0, 1.2], "N": 19, "tol_a": 0.05, "delta": 0.05}})
    assert cli_main(["critical-a", "--config", cfg, "--out", str(tmp_path / "c")]) == EXIT_FAIL


def test_missing_config_names_path(tmp_path, capsys):
    assert cli_main(["run", "--config", "nope.json", "--out", str(tmp_path)]) == EXIT_FAIL
    assert "nope.json" in capsys.readouterr().err


@pytest.mark.parametrize(
    "doc",
    [
        {"run": {}},
        {"problem": {**PROBLEM, "delta": 2.0}},
        {"problem": {"N": 9, "delta": 0.1}},
        {"problem": {**PROBLEM, "nonlinearity": "exp"}},
        {"problem": {**PROBLEM, "grid": {"kind": "chebyshev"}}},
        [1, 2],
    ],
)
def test_invalid_config_exits_one(tmp_path, doc):
    cfg = _write(tmp_path, doc)
    assert cli_main(["run", "--config", cfg, "--out", str(tmp_path / "r")]) == EXIT_FAIL


def test_malformed_json_exits_one(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli_main(["run", "--config", str(path), "--out", str(tmp_path)]) == EXIT_FAIL
    assert "bad.json" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert cli_main(["explode", "--out", "x"]) == EXIT_FAIL
    assert "usage" in capsys.readouterr().err
    assert cli_main([]) == EXIT_FAIL
    assert cli_main(["run", "--out", "x"]) == EXIT_FAIL


def test_help_exits_zero(capsys):
    assert cli_main(["--help"]) == EXIT_OK
    out = capsys.readouterr().out
    for mode in CONFIGS:
        assert mode in out


def test_run_config_requires_problem_block():
    with pytest.raises(InvalidArgument):
        RunConfig.from_json({}, "converge-time", "out")
    cfg = RunConfig.from_json({"validate": {"N_list": [3]}}, "validate", "out")
    assert cfg.spec is None and cfg.params == {"N_list": [3]}


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "quenchsplit", "validate", "--out", str(tmp_path / "v")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert (tmp_path / "v" / "validation.json").exists()
