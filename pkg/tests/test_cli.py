import json
from pathlib import Path

import pytest

from agigame.cli import main
from agigame.config import config_from_dict, config_to_dict, parse_config
from agigame.errors import ConfigError
from agigame.serialize import read_trajectory_csv, reaggregate

GOLDEN = Path(__file__).parent / "golden"


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_golden_tiny_run(tmp_path):
    assert run_cli("run", "--config", GOLDEN / "tiny_config.json", "--out", tmp_path) == 0
    assert (tmp_path / "trajectory.csv").read_bytes() == (GOLDEN / "tiny_trajectory.csv").read_bytes()
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["discounted_utility"]["p0"]["mean"] == pytest.approx(0.305, abs=1e-12)
    assert stats["discounted_utility"]["p1"]["mean"] == pytest.approx(-0.925, abs=1e-12)
    assert stats["detections"]["mean"] == 3


def write_config(path, **extra):
    raw = {"seed": 5, "episodes": 3, "params": {"horizon": 15, "n_initial": 3, "lambda_entry": 0.2},
           "mechanisms": {"base_audit_frequency": 0.5}}
    raw.update(extra)
    path.write_text(json.dumps(raw))
    return path


def test_run_is_deterministic(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "a") == 0
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "b") == 0
    for name in ("trajectory.csv", "stats.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_reproduces_run(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    run_cli("run", "--config", cfg, "--out", tmp_path / "a")
    man = tmp_path / "a" / "manifest.json"
    assert run_cli("run", "--config", man, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    data = json.loads(man.read_text())
    assert data["master_seed"] == 5 and len(data["episode_seeds"]) == 3


def test_csv_reaggregates_to_stats(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    run_cli("run", "--config", cfg, "--out", tmp_path)
    rows = read_trajectory_csv((tmp_path / "trajectory.csv").read_text())
    stats = json.loads((tmp_path / "stats.json").read_text())
    again = reaggregate(rows, parse_config(cfg).params.delta)
    for ep in stats["episodes"]:
        mine = again[ep["episode"]]
        for pid, u in ep["discounted_utility"].items():
            if pid in mine["discounted_utility"]:
                assert mine["discounted_utility"][pid] == pytest.approx(u, abs=1e-9)
        assert mine["defection_frequency"] == pytest.approx(ep["defection_frequency"], abs=1e-12)
        assert mine["detections"] == ep["detections"]


def test_json_format(tmp_path):
    cfg = write_config(tmp_path / "c.json", episodes=1)
    assert run_cli("run", "--config", cfg, "--out", tmp_path, "--format", "json") == 0
    data = json.loads((tmp_path / "trajectory.json").read_text())
    assert data


def test_workers_do_not_change_csv(tmp_path):
    cfg = write_config(tmp_path / "c.json", episodes=4)
    run_cli("run", "--config", cfg, "--out", tmp_path / "a")
    run_cli("run", "--config", cfg, "--out", tmp_path / "b", "--workers", 2)
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_minimal_config_uses_defaults(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    parsed = parse_config(cfg)
    assert parsed.params.horizon == 100 and parsed.episodes == 1
    assert run_cli("check", "--config", cfg) == 0


def test_config_round_trip():
    cfg = parse_config(GOLDEN / "tiny_config.json")
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_unknown_field_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"alpah": 0.1}}))
    with pytest.raises(ConfigError) as exc:
        parse_config(cfg)
    assert exc.value.field == "params.alpah"
    assert run_cli("run", "--config", cfg, "--out", tmp_path) == 2


def test_out_of_range_exit_code(tmp_path, caplog):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"delta": 1.5}}))
    assert run_cli("check", "--config", cfg) == 2
    assert "delta" in caplog.text


def test_bad_json_reports_line(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "seed": 1,\n  oops\n}')
    with pytest.raises(ConfigError) as exc:
        parse_config(cfg)
    assert exc.value.line == 3
    assert run_cli("check", "--config", cfg) == 2


def test_missing_file_exit_code(tmp_path):
    assert run_cli("check", "--config", tmp_path / "nope.json") == 2


def test_check_json(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json")
    assert run_cli("check", "--config", cfg, "--format", "json") == 0
    data = json.loads(capsys.readouterr().out)
    assert "theorem2" in data and "cond1" in data


def test_deviate_and_sweep(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", episodes=6)
    assert run_cli("deviate", "--config", cfg, "--out", tmp_path, "--strategy", "defect_once", "--defect-at", 2) == 0
    rep = json.loads((tmp_path / "deviation.json").read_text())
    assert rep["verdict"] in ("NoProfitableDeviation", "ProfitableDeviation", "Inconclusive")
    capsys.readouterr()
    assert run_cli("sweep", "--config", cfg, "--param", "xi", "--values", "0.1,0.5") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "xi,defection_rate,epsilon,cooperation_verdict"
    assert len(out) == 3
    assert run_cli("sweep", "--config", cfg, "--param", "nonsense", "--values", "1") == 2
    assert run_cli("deviate", "--config", cfg, "--strategy", "bogus") == 2
