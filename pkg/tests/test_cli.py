"""CLI surface: run, analyze, truth."""

import json

import pytest

from feaslab.cli import main


def test_analyze_halfwidth(capsys):
    assert main(["analyze", "halfwidth", "--beta", "0.05", "--theta", "1.2"]) == 0
    assert capsys.readouterr().out.strip() == "17"


def test_analyze_stoptime(capsys):
    main(["analyze", "stoptime", "--p", "0.5", "--h", "0.5", "--H", "17"])
    assert capsys.readouterr().out.strip() == "578.000000"


def test_analyze_absorption(capsys):
    main(["analyze", "absorption", "--p", "0.3", "--h", "0.3", "--H", "9"])
    assert capsys.readouterr().out.strip() == "0.500000"


def test_analyze_convert(capsys):
    main(["analyze", "convert", "--thresholds", "0.25,0.5", "--theta", "1.5"])
    out = capsys.readouterr().out
    assert "epsilon=0.068182" in out
    assert "h_tilde=0.257576" in out


def config_file(tmp_path, reps=10):
    body = {
        "id": "cli-test",
        "source": {"kind": "synthetic", "p": [[0.1], [0.9]]},
        "spec": {"alpha": 0.1, "theta": [2.0]},
        "procedure": {"kind": "brf"},
        "plans": [{"thresholds": [[0.5]]}],
        "macro_reps": reps,
        "master_seed": 31,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(body))
    return path


def test_run_writes_report(tmp_path, capsys):
    cfg = config_file(tmp_path)
    out = tmp_path / "report.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "config_id,procedure,pass,metric,value,se"
    assert "pcd" in capsys.readouterr().out or True
    assert any("pcd" in line for line in lines)


def test_run_overrides(tmp_path):
    cfg = config_file(tmp_path)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    main(["run", "--config", str(cfg), "--out", str(a), "--reps", "5", "--seed", "1"])
    main(["run", "--config", str(cfg), "--out", str(b), "--reps", "5", "--seed", "1"])
    assert a.read_bytes() == b.read_bytes()


def test_truth_command(tmp_path, capsys):
    cfg = config_file(tmp_path)
    out = tmp_path / "truth.csv"
    assert main(["truth", "--config", str(cfg), "--n", "2000", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "system,constraint,p_hat,se,n"
    assert len(lines) == 3  # header + 2 systems x 1 constraint


def test_out_field_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    body = json.loads(config_file(tmp_path).read_text())
    body["out"] = str(tmp_path / "from_config.csv")
    cfg = tmp_path / "with_out.json"
    cfg.write_text(json.dumps(body))
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_config.csv").exists()


def test_threads_env_fallback(tmp_path, monkeypatch):
    cfg = config_file(tmp_path)
    out = tmp_path / "t.csv"
    monkeypatch.setenv("FEASLAB_THREADS", "2")
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.exists()


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        main(["nonsense"])
