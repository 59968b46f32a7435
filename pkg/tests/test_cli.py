import json

import pytest

from stochmech.cli import EXIT_CONFIG, EXIT_GATE, EXIT_IO, EXIT_OK, main

TINY = """
[scenario]
kind = coherent_oscillator
name = tiny

[grid]
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
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return path


def test_simulate_happy_path(tiny_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--config", str(tiny_cfg), "--out", str(out)])
    assert code == EXIT_OK
    stdout = capsys.readouterr().out
    assert "[gate] PASS born_rule_ks" in stdout
    assert "manifest" in stdout
    assert (out / "manifest.json").exists()


def test_config_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[scenario]\nkind = warp_drive\n")
    code = main(["simulate", "--config", str(bad)])
    assert code == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_kind_command_mismatch_exits_2(tiny_cfg, capsys):
    code = main(["stationary", "--config", str(tiny_cfg)])
    assert code == EXIT_CONFIG
    assert "does not match 'stationary'" in capsys.readouterr().err


def test_gate_failure_exits_3(tiny_cfg, tmp_path, capsys):
    strict = tmp_path / "strict.cfg"
    strict.write_text(TINY.replace("ks_budget = 0.5", "ks_budget = 1e-6"))
    code = main(["simulate", "--config", str(strict), "--out",
                 str(tmp_path / "run")])
    assert code == EXIT_GATE
    assert "[gate] FAIL born_rule_ks" in capsys.readouterr().out


def test_unreadable_config_exits_4(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "missing.cfg")])
    assert code == EXIT_IO
    assert "cannot read config" in capsys.readouterr().err


def test_seed_override_changes_outputs(tiny_cfg, tmp_path):
    main(["simulate", "--config", str(tiny_cfg), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(tiny_cfg), "--out", str(tmp_path / "b"),
          "--seed", "42"])
    man_a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    man_b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert man_b["seed"] == 42
    bin_a = next(e for e in man_a["outputs"] if e["file"] == "ensemble.bin")
    bin_b = next(e for e in man_b["outputs"] if e["file"] == "ensemble.bin")
    assert bin_a["sha256"] != bin_b["sha256"]


def test_analyze_subcommand(tiny_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    main(["simulate", "--config", str(tiny_cfg), "--out", str(out)])
    dens_cfg = tmp_path / "dens.cfg"
    dens_cfg.write_text(TINY.replace("density, trajectories", "density"))
    code = main(["analyze", "--ensemble", str(out / "ensemble.bin"),
                 "--config", str(dens_cfg), "--out", str(tmp_path / "re")])
    assert code == EXIT_OK
    assert (tmp_path / "re" / "density.csv").exists()

    act_cfg = tmp_path / "act.cfg"
    act_cfg.write_text(TINY.replace("density, trajectories", "actions"))
    code = main(["analyze", "--ensemble", str(out / "ensemble.bin"),
                 "--config", str(act_cfg), "--out", str(tmp_path / "re2")])
    assert code == EXIT_CONFIG
    assert "needs field data" in capsys.readouterr().err


def test_analyze_rejects_garbage_binary(tiny_cfg, tmp_path, capsys):
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"not a real binary at all")
    code = main(["analyze", "--ensemble", str(junk), "--config", str(tiny_cfg)])
    assert code == EXIT_IO
    assert "bad ensemble file" in capsys.readouterr().err


def test_replay_subcommand_detects_corruption(tiny_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    main(["simulate", "--config", str(tiny_cfg), "--out", str(out)])
    manifest = out / "manifest.json"

    code = main(["replay", "--manifest", str(manifest)])
    assert code == EXIT_OK
    assert "replay ok: all outputs byte-identical" in capsys.readouterr().out

    man = json.loads(manifest.read_text())
    man["outputs"][0]["sha256"] = "f" * 64
    manifest.write_text(json.dumps(man))
    code = main(["replay", "--manifest", str(manifest)])
    assert code == EXIT_GATE
    assert "hash mismatch" in capsys.readouterr().out

    code = main(["replay", "--manifest", str(tmp_path / "gone.json")])
    assert code == EXIT_IO


def test_threads_flag_is_accepted_everywhere(tiny_cfg, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(tiny_cfg), "--out", str(out),
                 "--threads", "8"]) == EXIT_OK
    assert main(["replay", "--manifest", str(out / "manifest.json"),
                 "--threads", "2"]) == EXIT_OK
