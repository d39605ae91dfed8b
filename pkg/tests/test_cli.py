import json
from pathlib import Path

import pytest

from qpde import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out", str(tmp_path)])


@pytest.mark.parametrize("name", sorted(p.stem for p in CONFIGS.glob("*.json")))
def test_shipped_configs_verify(tmp_path, name):
    code = _run(tmp_path, "verify", "--config", str(CONFIGS / f"{name}.json"))
    rep = json.loads((tmp_path / f"{name}.json").read_text())
    assert code == cli.EXIT_OK, rep
    assert rep["passed"]
    assert rep["state_fidelity"] is None or 0 <= rep["state_fidelity"] <= 1


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["verify", "--config", str(CONFIGS / "heat_ja.json"), "--out", str(out)]) == 0
    assert (a / "heat_ja.json").read_bytes() == (b / "heat_ja.json").read_bytes()


def test_unknown_key_is_input_error(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"pde": "heat", "method": "dft", "grid": {"d": 1, "n": 3}, "t": 0.01, "colour": 1}')
    assert _run(tmp_path, "verify", "--config", str(cfg)) == cli.EXIT_INPUT


def test_method_must_match_pde(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"pde": "poisson", "method": "ja", "grid": {"d": 1, "n": 3}}')
    assert _run(tmp_path, "verify", "--config", str(cfg)) == cli.EXIT_INPUT


def test_zero_mode_poisson_exit_code(tmp_path):
    cfg = tmp_path / "zero.json"
    cfg.write_text('{"pde": "poisson", "method": "dft", "grid": {"d": 1, "n": 3}, "initial": {"kind": "plane_wave", "k": [0]}}')
    assert _run(tmp_path, "verify", "--config", str(cfg)) == cli.EXIT_INPUT


def test_budget_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("QPDE_BUDGET", "20")  # restored after the test
    code = _run(tmp_path, "verify", "--config", str(CONFIGS / "adv_dft.json"), "--budget", "4")
    assert code == cli.EXIT_BUDGET


def test_sweep_outputs_golden_header(tmp_path):
    cfg = tmp_path / "sw.json"
    cfg.write_text('{"pde": "advection", "method": "dft", "grid": {"d": 1, "n": 3}, "r": [1.0], "t": 0.3, "report_name": "adv"}')
    assert _run(tmp_path, "sweep", "--config", str(cfg), "--axis", "n", "--values", "2..5") == 0
    lines = (tmp_path / "adv_sweep.csv").read_text().splitlines()
    assert lines[0] == "axis_value,gate_total,ancillas,D,fidelity,p,status"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["2", "3", "4", "5"]
    summary = json.loads((tmp_path / "adv_sweep_summary.json").read_text())
    assert summary


def test_census_rows(tmp_path):
    assert _run(tmp_path, "census", "--d", "1..3", "--n", "2") == 0
    lines = (tmp_path / "census.csv").read_text().splitlines()
    assert lines[0].startswith("d,n,row")
    assert len(lines) == 1 + 3 * 3


def test_coeffs_export(tmp_path):
    assert _run(tmp_path, "coeffs", "--config", str(CONFIGS / "adv_ja.json")) == 0
    text = (tmp_path / "adv_ja_coeffs.csv").read_text()
    assert text.count("\n") > 3


def test_lindblad_writes_trajectory(tmp_path):
    assert _run(tmp_path, "verify", "--config", str(CONFIGS / "lin.json")) == 0
    assert (tmp_path / "trajectory.csv").read_text().startswith("step,")
