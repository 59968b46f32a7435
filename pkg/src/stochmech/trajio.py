"""File formats: CSV exports, the QAMTRAJ1 trajectory binary, checksums.

All writers are deterministic: fixed column order, shortest round-trip float
formatting, newline='\\n'.  Identical inputs produce byte-identical files,
which is what the replay machinery diffs against.
"""

import csv
import hashlib
import struct
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .kinematics import TrajectoryEnsemble
from .madelung import MadelungFields

MAGIC = b"QAMTRAJ1"

PathLike = Union[str, Path]


def _fmt(value) -> str:
    return repr(float(value))


def _write_rows(path: PathLike, header: Iterable[str], rows: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_fields_csv(fields: MadelungFields, path: PathLike) -> None:
    """Long-format field table: t, x, rho, S, v, u, flag_low_density."""
    xs = fields.grid.points

    def rows():
        for i, t in enumerate(fields.times):
            ts = _fmt(t)
            for j in range(xs.size):
                yield (ts, _fmt(xs[j]), _fmt(fields.rho[i, j]), _fmt(fields.S[i, j]),
                       _fmt(fields.v[i, j]), _fmt(fields.u[i, j]),
                       int(fields.low_density[i, j]))

    _write_rows(path, ("t", "x", "rho", "S", "v", "u", "flag_low_density"), rows())


def write_ensemble_csv(ensemble: TrajectoryEnsemble, path: PathLike,
                       max_paths: int = None) -> None:
    """Trajectory table t, path_id, x; optionally only the first max_paths."""
    n = ensemble.n_paths if max_paths is None else min(max_paths, ensemble.n_paths)

    def rows():
        for p in range(n):
            row = ensemble.paths[p]
            for k, t in enumerate(ensemble.times):
                yield (_fmt(t), p, _fmt(row[k]))

    _write_rows(path, ("t", "path_id", "x"), rows())


def write_ensemble_binary(ensemble: TrajectoryEnsemble, path: PathLike) -> None:
    """Compact table: magic, dims, time grid, paths row-major, absorption times.

    Layout, all little-endian: magic "QAMTRAJ1"; uint64 n_paths, n_times;
    float64 times[n_times]; float64 paths[n_paths][n_times] row-major;
    float64 absorbed_at[n_paths] (NaN = never absorbed).
    """
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", ensemble.n_paths, ensemble.times.size))
        fh.write(np.ascontiguousarray(ensemble.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ensemble.paths, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ensemble.absorbed_at, dtype="<f8").tobytes())


def read_ensemble_binary(path: PathLike) -> dict:
    """Inverse of write_ensemble_binary; returns times, paths, absorbed_at."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a trajectory binary: magic {magic!r}")
        n_paths, n_times = struct.unpack("<QQ", fh.read(16))
        times = np.frombuffer(fh.read(8 * n_times), dtype="<f8")
        paths = np.frombuffer(fh.read(8 * n_paths * n_times), dtype="<f8")
        if paths.size != n_paths * n_times:
            raise ValueError("truncated trajectory binary")
        paths = paths.reshape(n_paths, n_times)
        tail = fh.read(8 * n_paths)
        absorbed = (np.frombuffer(tail, dtype="<f8") if len(tail) == 8 * n_paths
                    else np.full(n_paths, np.nan))
    return {"times": times.copy(), "paths": paths.copy(),
            "absorbed_at": absorbed.copy()}


def write_variational_csv(records: Iterable[dict], path: PathLike) -> None:
    """Report rows: functional, estimate, stderr, n_paths, dt_sde, scenario."""
    def rows():
        for r in records:
            yield (r["functional"], _fmt(r["estimate"]), _fmt(r["stderr"]),
                   int(r["n_paths"]), _fmt(r["dt_sde"]), r["scenario"])

    _write_rows(path, ("functional", "estimate", "stderr", "n_paths", "dt_sde",
                       "scenario"), rows())


def write_stationary_csv(solution, path: PathLike) -> None:
    xs = solution.grid.points

    def rows():
        for j in range(xs.size):
            yield (_fmt(xs[j]), _fmt(solution.u_profile[j]), _fmt(solution.rho[j]))

    _write_rows(path, ("x", "u", "rho"), rows())


def write_histogram_csv(histogram, path: PathLike) -> None:
    centers = histogram.bin_centers

    def rows():
        for j in range(centers.size):
            yield (_fmt(centers[j]), _fmt(histogram.density[j]))

    _write_rows(path, ("bin_center", "density"), rows())


def write_autocorrelation_csv(acf, path: PathLike) -> None:
    def rows():
        for j in range(acf.lags.size):
            yield (_fmt(acf.lags[j]), _fmt(acf.values[j]), _fmt(acf.stderr[j]))

    _write_rows(path, ("tau", "C", "stderr"), rows())


def write_spectrum_csv(spectrum, path: PathLike) -> None:
    def rows():
        for j in range(spectrum.omega.size):
            yield (_fmt(spectrum.omega[j]), _fmt(spectrum.psd[j]))

    _write_rows(path, ("freq", "psd"), rows())


def write_fpt_csv(result, path: PathLike) -> None:
    """Per-path rows: path_id, fpt (empty when censored), censored flag."""
    def rows():
        for p in range(result.times.size):
            t = result.times[p]
            censored = int(not np.isfinite(t))
            yield (p, "" if censored else _fmt(t), censored)

    _write_rows(path, ("path_id", "fpt", "censored"), rows())


def sha256_of_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def sha256_of_arrays(*arrays: np.ndarray) -> str:
    """Checksum of array contents plus shapes (order-sensitive)."""
    digest = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        digest.update(str(a.shape).encode())
        digest.update(str(a.dtype).encode())
        digest.update(a.tobytes())
    return digest.hexdigest()
