import csv
import hashlib
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from stochmech import TrajectoryEnsemble
from stochmech.svgplot import line_plot
from stochmech.trajio import (MAGIC, read_ensemble_binary, sha256_of_arrays,
                              sha256_of_file, write_autocorrelation_csv,
                              write_ensemble_binary, write_ensemble_csv,
                              write_fpt_csv, write_histogram_csv,
                              write_spectrum_csv, write_stationary_csv,
                              write_variational_csv)


@pytest.fixture
def small_ensemble():
    rng = np.random.default_rng(5)
    times = np.linspace(0.0, 1.0, 11)
    paths = rng.normal(0.0, 1.0, (7, 11))
    absorbed = np.full(7, np.nan)
    absorbed[3] = 0.4
    return TrajectoryEnsemble(times=times, paths=paths, direction="forward",
                              seed=5, stream_ids=2 * np.arange(7),
                              absorbed_at=absorbed, dt_sde=0.1,
                              boundary_policy="absorb")


def test_binary_round_trip_is_bitwise(tmp_path, small_ensemble):
    out = tmp_path / "traj.bin"
    write_ensemble_binary(small_ensemble, out)
    back = read_ensemble_binary(out)
    assert back["times"].tobytes() == small_ensemble.times.tobytes()
    assert back["paths"].tobytes() == small_ensemble.paths.tobytes()
    # NaN placement survives, including the one real absorption time
    assert np.array_equal(back["absorbed_at"], small_ensemble.absorbed_at,
                          equal_nan=True)


def test_binary_magic_is_checked(tmp_path):
    bad = tmp_path / "bogus.bin"
    bad.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
    with pytest.raises(ValueError, match="not a trajectory binary"):
        read_ensemble_binary(bad)


def test_binary_truncated_paths_rejected(tmp_path, small_ensemble):
    out = tmp_path / "traj.bin"
    write_ensemble_binary(small_ensemble, out)
    blob = out.read_bytes()
    # chop into the path block: 8 magic + 16 dims + 11*8 times + a bit more
    out.write_bytes(blob[: 8 + 16 + 88 + 40])
    with pytest.raises(ValueError, match="truncated"):
        read_ensemble_binary(out)


def test_binary_missing_absorption_tail_reads_as_nan(tmp_path, small_ensemble):
    out = tmp_path / "traj.bin"
    write_ensemble_binary(small_ensemble, out)
    blob = out.read_bytes()
    out.write_bytes(blob[: len(blob) - 7 * 8])  # strip the absorbed_at block
    back = read_ensemble_binary(out)
    assert np.all(np.isnan(back["absorbed_at"]))
    assert back["paths"].shape == (7, 11)


def test_csv_floats_round_trip_exactly(tmp_path, small_ensemble):
    out = tmp_path / "traj.csv"
    write_ensemble_csv(small_ensemble, out, max_paths=3)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "path_id", "x"]
    assert len(rows) == 1 + 3 * 11
    for t_str, pid, x_str in rows[1:]:
        p, guess = int(pid), float(x_str)
        k = np.argmin(np.abs(small_ensemble.times - float(t_str)))
        assert guess == small_ensemble.paths[p, k]  # repr() round trip is exact


def test_report_writers_emit_expected_headers(tmp_path, ho_solution):
    head = {}

    def first_line(name):
        with open(tmp_path / name, newline="") as fh:
            return next(csv.reader(fh))

    write_variational_csv([{"functional": "J_R", "estimate": -0.5,
                            "stderr": 0.001, "n_paths": 100, "dt_sde": 1e-3,
                            "scenario": "demo"}], tmp_path / "var.csv")
    head["var"] = first_line("var.csv")

    write_stationary_csv(ho_solution, tmp_path / "stat.csv")
    head["stat"] = first_line("stat.csv")

    class Hist:
        bin_centers = np.array([0.0, 1.0])
        density = np.array([0.25, 0.75])

    write_histogram_csv(Hist, tmp_path / "hist.csv")
    head["hist"] = first_line("hist.csv")

    class Acf:
        lags = np.array([0.0, 0.5])
        values = np.array([0.5, 0.3])
        stderr = np.array([0.01, 0.01])

    write_autocorrelation_csv(Acf, tmp_path / "acf.csv")
    head["acf"] = first_line("acf.csv")

    class Spec:
        omega = np.array([0.0, 1.0])
        psd = np.array([0.3, 0.15])

    write_spectrum_csv(Spec, tmp_path / "psd.csv")
    head["psd"] = first_line("psd.csv")

    assert head == {"var": ["functional", "estimate", "stderr", "n_paths",
                            "dt_sde", "scenario"],
                    "stat": ["x", "u", "rho"],
                    "hist": ["bin_center", "density"],
                    "acf": ["tau", "C", "stderr"],
                    "psd": ["freq", "psd"]}


def test_fpt_csv_leaves_censored_cells_empty(tmp_path):
    class Res:
        times = np.array([0.25, np.nan, 1.5])

    write_fpt_csv(Res, tmp_path / "fpt.csv")
    with open(tmp_path / "fpt.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["path_id", "fpt", "censored"]
    assert rows[1] == ["0", "0.25", "0"]
    assert rows[2] == ["1", "", "1"]
    assert rows[3] == ["2", "1.5", "0"]


def test_sha256_helpers(tmp_path):
    payload = b"deterministic bytes\n"
    f = tmp_path / "blob"
    f.write_bytes(payload)
    assert sha256_of_file(f) == hashlib.sha256(payload).hexdigest()

    a = np.arange(6, dtype=np.float64)
    assert sha256_of_arrays(a) == sha256_of_arrays(a.copy())
    # shape is part of the digest: a flat view must not collide with 2x3
    assert sha256_of_arrays(a) != sha256_of_arrays(a.reshape(2, 3))
    assert sha256_of_arrays(a) != sha256_of_arrays(a.astype(np.float32))


def test_svg_plot_is_deterministic_and_well_formed(tmp_path):
    x = np.linspace(0.0, 5.0, 40)
    ys = [np.sin(x), np.cos(x)]
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    line_plot(x, ys, p1, title="waves", xlabel="t", ylabel="amp",
              labels=["sin", "cos"])
    line_plot(x, ys, p2, title="waves", xlabel="t", ylabel="amp",
              labels=["sin", "cos"])
    assert p1.read_bytes() == p2.read_bytes()
    root = ET.parse(p1).getroot()
    assert root.tag.endswith("svg")
    polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(polylines) == 2


def test_svg_plot_skips_non_finite_points(tmp_path):
    x = np.linspace(0.0, 1.0, 5)
    y = np.array([0.0, np.nan, 2.0, np.inf, 1.0])
    p = tmp_path / "gappy.svg"
    line_plot(x, [y], p)
    root = ET.parse(p).getroot()
    poly = next(e for e in root.iter() if e.tag.endswith("polyline"))
    assert len(poly.get("points").split()) == 3


def test_magic_is_eight_bytes():
    assert len(MAGIC) == 8  # header layout hard-codes this offset
