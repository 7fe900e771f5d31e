"""Tests for the command-line front end."""

import json
import os

import pytest

from diskheat.cli import (ConfigError, RunConfig, load_config, main, report)
from diskheat.verifier import CheckResult


@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "geometry": {"M": 64},
        "time": {"N": 128},
        "experiment": {"samples": 6, "draws": 20, "starts": 3, "modes": 6,
                       "deltas": [8e-4, 8e-3, 7.8e-2]},
        "output": {"dir": str(tmp_path / "out")},
    }))
    return str(path)


def test_defaults_when_no_config():
    cfg = load_config(None)
    assert cfg.M == 256
    assert cfg.N == 512
    assert cfg.theta == 0.5
    assert cfg.eps == 0.1
    assert cfg.seed == 42
    assert cfg.families is None


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({
        "geometry": {"R": 2.0, "M": 96, "n": 2, "V0": 3.0},
        "time": {"T": 0.5, "N": 64, "theta": 1.0},
        "problem": {"eps": 0.2, "u0": {"family": "parabolic",
                                       "amplitude": 0.3}},
        "experiment": {"families": ["annulus"], "deltas": [0.01],
                       "modes": 4, "seed": 7, "samples": 3, "draws": 5,
                       "starts": 2},
        "output": {"dir": "somewhere"},
    }))
    cfg = load_config(str(path))
    assert cfg.R == 2.0 and cfg.M == 96 and cfg.v0 == 3.0
    assert cfg.T == 0.5 and cfg.N == 64 and cfg.theta == 1.0
    assert cfg.eps == 0.2
    assert cfg.u0_family == "parabolic" and cfg.u0_amplitude == 0.3
    assert cfg.families == ("annulus",)
    assert cfg.deltas == (0.01,)
    assert cfg.modes == 4 and cfg.seed == 7
    assert cfg.resolved_out_dir() == "somewhere"


@pytest.mark.parametrize("doc,needle", [
    ({"time": {"theta": 0.3}}, "time.theta"),
    ({"geometry": {"M": 4}}, "geometry.M"),
    ({"geometry": {"V0": 99.0}}, "geometry.V0"),
    ({"bogus": {}}, "bogus"),
    ({"geometry": {"edge": 1}}, "geometry.edge"),
    ({"problem": {"u0": {"family": "spiky"}}}, "problem.u0.family"),
    ({"experiment": {"deltas": [-0.1]}}, "experiment.deltas"),
    ({"experiment": {"modes": "many"}}, "experiment.modes"),
    ({"experiment": {"families": []}}, "experiment.families"),
    ({"time": {"N": 0}}, "time.N"),
])
def test_validation_names_field(tmp_path, doc, needle):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError) as err:
        load_config(str(path))
    assert needle in str(err.value)


def test_invalid_json_is_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_usage_errors_exit_2(capsys):
    assert main(["bogus"]) == 2
    capsys.readouterr()


def test_bad_config_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"time": {"theta": 0.0}}))
    assert main(["spectrum", "--config", str(path)]) == 2
    assert "time.theta" in capsys.readouterr().err


def test_verify_ti_writes_artifacts(small_cfg, tmp_path, capsys):
    assert main(["verify-ti", "--config", small_cfg]) == 0
    out = tmp_path / "out"
    lines = (out / "deficit_ti.csv").read_text().splitlines()
    assert lines[0].startswith("competitor_id,family,")
    assert len(lines) == 1 + 9
    manifest = json.loads((out / "deficit-sweep-ti.manifest.json")
                          .read_text())
    assert manifest["passed"] is True
    assert manifest["margin"] > 0
    assert "[PASS] deficit-sweep-ti" in capsys.readouterr().out


def test_csv_rerun_byte_identical(small_cfg, tmp_path, capsys):
    assert main(["verify-ti", "--config", small_cfg]) == 0
    first = (tmp_path / "out" / "deficit_ti.csv").read_bytes()
    assert main(["verify-ti", "--config", small_cfg]) == 0
    assert (tmp_path / "out" / "deficit_ti.csv").read_bytes() == first
    capsys.readouterr()


def test_verify_td_needs_positive_eps(small_cfg, tmp_path, capsys):
    assert main(["verify-td", "--config", small_cfg, "--eps", "0"]) == 2
    assert "problem.eps" in capsys.readouterr().err


def test_spectrum_modes_flag(small_cfg, tmp_path, capsys):
    assert main(["spectrum", "--config", small_cfg, "--modes", "8"]) == 0
    lines = (tmp_path / "out" / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "k,omega_k,fd_error"
    assert len(lines) == 1 + 8
    manifest = json.loads((tmp_path / "out" /
                           "spectrum.manifest.json").read_text())
    assert manifest["passed"] is True
    capsys.readouterr()


def test_flag_overrides_config(tmp_path, capsys):
    out = tmp_path / "flagged"
    code = main(["monotonicity", "--grid", "64", "--steps", "96",
                 "--out", str(out), "--eps", "0.05"])
    assert code == 0
    manifest = json.loads((out / "radial-monotonicity.manifest.json")
                          .read_text())
    assert manifest["setup"]["M"] == 64
    assert manifest["setup"]["N"] == 96
    capsys.readouterr()


def test_env_var_out_dir(small_cfg, tmp_path, monkeypatch, capsys):
    target = tmp_path / "env_out"
    monkeypatch.setenv("DISKHEAT_OUT", str(target))
    cfg = tmp_path / "noout.json"
    cfg.write_text(json.dumps({"geometry": {"M": 64}, "time": {"N": 96}}))
    assert main(["monotonicity", "--config", str(cfg)]) == 0
    assert (target / "radial-monotonicity.manifest.json").exists()
    capsys.readouterr()


def test_sweep_command_kind(small_cfg, tmp_path, capsys):
    assert main(["sweep", "--kind", "td", "--config", small_cfg,
                 "--families", "annulus,oscillating-annulus-m2"]) == 0
    assert (tmp_path / "out" / "deficit_td.csv").exists()
    capsys.readouterr()


def test_optimize_command(small_cfg, tmp_path, capsys):
    assert main(["optimize", "--config", small_cfg]) == 0
    lines = (tmp_path / "out" / "optimize.csv").read_text().splitlines()
    assert lines[0].startswith("start,seed,converged,")
    assert len(lines) == 1 + 3
    for row in lines[1:]:
        assert ",True," in row
    capsys.readouterr()


def test_exit_1_when_a_check_fails(small_cfg, tmp_path, monkeypatch,
                                   capsys):
    import diskheat.cli as cli

    def forced(cfg, out):
        return [CheckResult(name="forced", passed=False, margin=-1.0,
                            details="forced failure")]

    monkeypatch.setitem(cli.COMMANDS, "talenti", forced)
    assert main(["talenti", "--config", small_cfg]) == 1
    assert "[FAIL] forced" in capsys.readouterr().out


def test_report_merges_manifests(small_cfg, tmp_path, capsys):
    assert main(["monotonicity", "--config", small_cfg]) == 0
    assert main(["spectrum", "--config", small_cfg]) == 0
    capsys.readouterr()
    assert main(["report", "--config", small_cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["counts"]["total"] == 3
    assert doc["all_passed"] is True
    assert doc["warnings"] == []
    names = [c["check_name"] for c in doc["checks"]]
    assert names == sorted(names)


def test_report_flags_corrupt_manifest(tmp_path, capsys):
    out = tmp_path / "arts"
    out.mkdir()
    (out / "good.manifest.json").write_text(json.dumps(
        {"check_name": "good", "passed": True, "margin": 1.0}))
    (out / "broken.manifest.json").write_text("{nope")
    doc = report(str(out))
    assert doc["counts"]["total"] == 1
    assert len(doc["warnings"]) == 1
    assert "broken.manifest.json" in doc["warnings"][0]


def test_report_empty_dir(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path / "empty")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["counts"] == {"total": 0, "passed": 0, "failed": 0}


def test_planar_guard_for_polar_batteries(tmp_path, capsys):
    cfg = tmp_path / "n3.json"
    cfg.write_text(json.dumps({"geometry": {"M": 64, "n": 3},
                               "time": {"N": 64},
                               "output": {"dir": str(tmp_path / "o")}}))
    assert main(["talenti", "--config", str(cfg)]) == 2
    assert "geometry.n" in capsys.readouterr().err
