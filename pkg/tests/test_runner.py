import json

import pytest

from stochmech import ConfigError
from stochmech.config import parse_config
from stochmech.runner import (OUTDIR_ENV, analyze_binary, replay,
                              resolve_outdir, run_scenario)
from stochmech.trajio import read_ensemble_binary, sha256_of_file

TINY = """
[scenario]
kind = coherent_oscillator
name = tiny

[grid]
x_min = -10.0
x_max = 10.0
n_points = 201
dt_pde = 0.1

[sde]
dt_sde = 0.1
n_paths = 200
record_every = 1
horizon = 0.2

[analysis]
analyses = density, trajectories
ks_budget = 0.5
"""


@pytest.fixture
def tiny_config():
    return parse_config(TINY)


def test_outdir_precedence(tiny_config, monkeypatch, tmp_path):
    monkeypatch.delenv(OUTDIR_ENV, raising=False)
    assert resolve_outdir(tiny_config, None) == type(tmp_path)(".")
    monkeypatch.setenv(OUTDIR_ENV, str(tmp_path / "env"))
    assert resolve_outdir(tiny_config, None) == tmp_path / "env"
    cfg_dir = parse_config(TINY + f"\n[output]\ndirectory = {tmp_path / 'cfg'}\n")
    assert resolve_outdir(cfg_dir, None) == tmp_path / "cfg"
    assert resolve_outdir(cfg_dir, str(tmp_path / "cli")) == tmp_path / "cli"


def test_run_scenario_manifest_and_outputs(tiny_config, tmp_path):
    result = run_scenario(tiny_config, outdir=str(tmp_path))
    assert result.passed
    man = result.manifest
    assert man["tool"] == "stochmech"
    assert man["kind"] == "coherent_oscillator"
    assert man["scenario"] == "tiny"
    assert man["seed"] == 20260101
    # the echo is a parseable config equivalent to the one we ran
    assert parse_config(man["config_echo"]) == tiny_config
    names = {e["file"] for e in man["outputs"]}
    assert names == {"density.csv", "density.svg", "ensemble.bin",
                     "ensemble.csv", "paths.svg"}
    for entry in man["outputs"]:
        assert sha256_of_file(tmp_path / entry["file"]) == entry["sha256"]
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk == man


def test_gate_failure_still_writes_manifest(tmp_path):
    cfg = parse_config(TINY.replace("ks_budget = 0.5", "ks_budget = 1e-6"))
    result = run_scenario(cfg, outdir=str(tmp_path))
    assert not result.passed
    gate = next(g for g in result.gates if g.name == "born_rule_ks")
    assert not gate.passed
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert any(not g["passed"] for g in man["gates"])


def test_replay_verifies_and_detects_tampering(tiny_config, tmp_path):
    run_scenario(tiny_config, outdir=str(tmp_path))
    manifest_path = tmp_path / "manifest.json"

    report = replay(str(manifest_path))
    assert report.ok and not report.mismatched and not report.missing

    man = json.loads(manifest_path.read_text())
    man["outputs"][0]["sha256"] = "0" * 64
    manifest_path.write_text(json.dumps(man))
    report = replay(str(manifest_path))
    assert not report.ok
    assert man["outputs"][0]["file"] in report.mismatched

    man = json.loads((tmp_path / "manifest.json").read_text())  # stale copy
    man["outputs"][0]["sha256"] = "0" * 64
    man["outputs"][1]["file"] = "ghost.csv"
    manifest_path.write_text(json.dumps(man))
    report = replay(str(manifest_path))
    assert "ghost.csv" in report.missing


def test_replay_rejects_seed_disagreement(tiny_config, tmp_path):
    run_scenario(tiny_config, outdir=str(tmp_path))
    manifest_path = tmp_path / "manifest.json"
    man = json.loads(manifest_path.read_text())
    man["seed"] = 999
    manifest_path.write_text(json.dumps(man))
    with pytest.raises(ConfigError, match="seed disagrees"):
        replay(str(manifest_path))


def test_analyze_binary_round(tiny_config, tmp_path):
    run_scenario(tiny_config, outdir=str(tmp_path))
    binary = read_ensemble_binary(tmp_path / "ensemble.bin")

    cfg = parse_config(TINY.replace("density, trajectories", "density"))
    out2 = tmp_path / "reanalysis"
    result = analyze_binary(binary, cfg, outdir=str(out2))
    assert result.manifest["kind"] == "analyze"
    assert (out2 / "density.csv").exists()
    assert (out2 / "manifest.json").exists()

    # the recomputed density must agree with the original run's artifact
    assert ((out2 / "density.csv").read_bytes()
            == (tmp_path / "density.csv").read_bytes())

    bad = parse_config(TINY.replace("density, trajectories", "actions"))
    with pytest.raises(ConfigError, match="needs field data"):
        analyze_binary(binary, bad, outdir=str(out2))


def test_failed_emit_removes_partial_outputs(tiny_config, tmp_path):
    # density.svg is the second artifact; making its target an occupied
    # directory forces the atomic rename to fail partway through the batch
    trap = tmp_path / "density.svg"
    trap.mkdir()
    (trap / "occupied").write_text("x")
    with pytest.raises(OSError):
        run_scenario(tiny_config, outdir=str(tmp_path))
    assert not (tmp_path / "density.csv").exists()
    assert not (tmp_path / "manifest.json").exists()
    assert not list(tmp_path.glob("*.tmp"))


def test_runs_are_deterministic_and_thread_flag_inert(tiny_config, tmp_path):
    a = run_scenario(tiny_config, outdir=str(tmp_path / "a"), threads=None)
    b = run_scenario(tiny_config, outdir=str(tmp_path / "b"), threads=7)
    ha = [e["sha256"] for e in a.manifest["outputs"]]
    hb = [e["sha256"] for e in b.manifest["outputs"]]
    assert ha == hb
    assert a.manifest["field_checksum"] == b.manifest["field_checksum"]


def test_stationary_scenario_emits_solution_artifacts(tmp_path):
    cfg = parse_config("""
[scenario]
kind = stationary_ground

[grid]
n_points = 401

[sde]
n_paths = 200
horizon = 0.5
record_every = 10
dt_sde = 0.001

[analysis]
analyses = density
ks_budget = 0.5
""")
    result = run_scenario(cfg, outdir=str(tmp_path))
    assert result.passed
    payload = json.loads((tmp_path / "stationary.json").read_text())
    assert payload["E"] == pytest.approx(0.5, abs=1e-5)
    names = {e["file"] for e in result.manifest["outputs"]}
    assert {"stationary.csv", "stationary.json", "density.csv"} <= names
