import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from kitaevbraid import __version__
from kitaevbraid.cli import main, parse_real


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def run_json(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 0, err
    return json.loads(out)


def csv_body(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_gates_report(capsys):
    doc = run_json(["--gate", "H"], capsys)
    rep = doc["report"]
    assert doc["version"] == __version__ and doc["status"] == "ok"
    assert doc["config"]["gate"] == "H" and doc["config"]["ite_time"] == 20.0
    assert rep["process_fidelity"] >= 0.999999
    assert rep["tomography"]["settings"] == 256
    assert len(rep["tomography"]["expectations"]) * len(rep["tomography"]["expectations"][0]) == 256
    assert rep["tomography"]["max_deviation"] < 1e-8
    block = np.array(rep["even_block"]["real"]) + 1j * np.array(rep["even_block"]["imag"])
    assert np.allclose(block, np.array([[1, -1], [1, 1]]) / np.sqrt(2), atol=1e-8)


def test_t_gate_reports_stripped_phase(capsys):
    rep = run_json(["--gate", "T"], capsys)["report"]
    assert complex(*rep["global_phase"]) == pytest.approx(np.exp(-1j * np.pi / 8))
    assert rep["global_phase_angle"] == pytest.approx(-np.pi / 8)


def test_unknown_gate_exits_2(capsys):
    code, out, err = run(["--gate", "Q"], capsys)
    assert code == 2 and out == "" and "unknown gate" in err


def test_bad_flags_exit_2(capsys):
    assert run(["--experiment", "nope"], capsys)[0] == 2
    assert run(["--ite-time", "-1"], capsys)[0] == 2
    assert run(["--tau", "inf", "--gate", "M"], capsys)[0] == 2


def test_dj_report(capsys):
    rep = run_json(["--experiment", "dj"], capsys)["report"]
    assert rep["runs"]["constant"]["verdict"] == "constant"
    assert rep["runs"]["balanced"]["verdict"] == "balanced"
    for run_ in rep["runs"].values():
        assert len(run_["trajectory"]) == 3
    assert rep["runs"]["constant"]["trajectory"][-1]["populations"]["11"] >= 1 - 1e-8


def test_dj_csv_one_row_per_point(capsys):
    code, out, _ = run(["--experiment", "dj", "--format", "csv"], capsys)
    assert code == 0
    rows = csv_body(out)
    assert len(rows) == 6
    assert {r["oracle"] for r in rows} == {"constant", "balanced"}
    assert complex(rows[0]["amp_00"].replace("i", "j")) == pytest.approx(1 / np.sqrt(2), abs=1e-8)
    assert out.startswith(f"# version={__version__}")


def test_noise_report(capsys):
    rep = run_json(["--experiment", "noise", "--gate", "T", "--noise", "phase:4", "--noise", "flip:3,4"], capsys)["report"]
    by_spec = {r["noise"]: r for r in rep["results"]}
    assert by_spec["phase:4@8"]["fidelity"] >= 0.999 and not by_spec["phase:4@8"]["flagged"]
    assert by_spec["flip:3,4@8"]["flagged"]
    assert set(by_spec["phase:4@8"]["survival"]) == {"00", "01", "10", "11"}


def test_noise_rejects_nonadjacent_flip(capsys):
    code, _, err = run(["--experiment", "noise", "--noise", "flip:1,4"], capsys)
    assert code == 2 and "adjacent" in err
    assert run(["--experiment", "noise"], capsys)[0] == 2


def test_tau_sweep_matches_closed_form(capsys):
    rep = run_json(["--experiment", "sweep", "--sweep-param", "tau", "--sweep-values", "0,pi/8,pi/2"], capsys)["report"]
    for row in rep["rows"]:
        tau = row["tau"]
        block = np.array(row["even_block"]["real"]) + 1j * np.array(row["even_block"]["imag"])
        closed = np.array([[np.cos(tau), -1j * np.sin(tau)], [-1j * np.sin(tau), np.cos(tau)]])
        assert row["fidelity"] > 1 - 1e-10
        assert row["frobenius_error"] < 1e-8
        phase = np.vdot(closed, block) / abs(np.vdot(closed, block))
        assert np.allclose(block, phase * closed, atol=1e-8)


def test_ite_time_sweep_converges(capsys):
    rep = run_json(["--experiment", "sweep", "--sweep-param", "ite_time", "--sweep-values", "1,2,5,10,20", "--jobs", "2"], capsys)["report"]
    fids = [r["fidelity"] for r in rep["rows"]]
    assert all(b >= a for a, b in zip(fids, fids[1:]))
    assert fids[-1] > 1 - 1e-12
    for r in rep["rows"][:4]:
        assert 0.5 < r["leakage_over_bound"] < 2


def test_empty_sweep_exits_2(capsys):
    assert run(["--experiment", "sweep", "--sweep-values", ""], capsys)[0] == 2
    assert run(["--experiment", "sweep", "--sweep-param", "ite_time", "--sweep-values", "0,1"], capsys)[0] == 2


def test_reports_are_deterministic(capsys, tmp_path):
    first = run(["--gate", "R"], capsys)[1]
    assert run(["--gate", "R"], capsys)[1] == first
    sweep = ["--experiment", "sweep", "--sweep-values", "0.1,0.2,0.3", "--format", "csv"]
    serial = run(sweep + ["--jobs", "1"], capsys)[1]
    assert run(sweep + ["--jobs", "1"], capsys)[1] == serial
    parallel = run(sweep + ["--jobs", "3"], capsys)[1]
    # only the recorded jobs field differs
    assert parallel.replace('"jobs": 3', '"jobs": 1') == serial
    out = tmp_path / "report.json"
    assert main(["--gate", "R", "--output", str(out)]) == 0
    assert json.loads(out.read_text())["report"] == json.loads(first)["report"]


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "noise", "gate": "T", "noise": [{"kind": "phase", "sites": [3]}]}))
    rep = run_json(["--config", str(cfg)], capsys)
    assert rep["config"]["gate"] == "T"
    assert rep["report"]["results"][0]["flagged"]
    over = run_json(["--config", str(cfg), "--noise", "phase:4"], capsys)
    assert over["config"]["noise"] == ["phase:4"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert run(["--config", str(bad)], capsys)[0] == 2
    assert run(["--config", str(tmp_path / "missing.json")], capsys)[0] == 2


def test_validation_failure_exits_3(capsys, monkeypatch):
    import kitaevbraid.cli as cli

    monkeypatch.setattr(cli, "GATE_FIDELITY_MIN", 1.5)
    code, out, err = run(["--gate", "H"], capsys)
    assert code == 3 and "validation failed" in err
    assert json.loads(out)["status"] == "failed"


def test_gates_csv(capsys):
    code, out, _ = run(["--gate", "R", "--format", "csv"], capsys)
    assert code == 0
    rows = csv_body(out)
    entry = next(r for r in rows if r["quantity"] == "even_block" and r["row"] == "1" and r["col"] == "1")
    assert complex(entry["value"].replace("i", "j")) == pytest.approx(-1j, abs=1e-8)


def test_parse_real():
    assert parse_real("pi/8") == pytest.approx(np.pi / 8)
    assert parse_real("2*pi") == pytest.approx(2 * np.pi)
    assert parse_real("-pi/2") == pytest.approx(-np.pi / 2)
    assert parse_real("0.25") == 0.25
    with pytest.raises(ValueError):
        parse_real("tau")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kitaevbraid", "--gate", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "unknown gate" in proc.stderr
