"""Scenario orchestration: pipeline wiring, consistency gates, artifacts.

run_scenario builds the requested fields and ensembles, evaluates every
analysis in memory, then emits all files atomically (temp + rename, manifest
written last as the commit marker).  replay re-runs a manifest's config echo
and verifies the recorded output hashes byte for byte; --threads style
knobs never enter any numeric path.
"""

import json
import math
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import __version__
from .analysis import (autocorrelation, empirical_density, first_passage_times,
                       ks_distance, power_spectral_density)
from .coherent import CoherentStateSpec, classical_trajectory, coherent_wavefield
from .config import ScenarioConfig, parse_config, render_config
from .errors import ConfigError
from .grid import build_grid
from .kinematics import SdeConfig, TrajectoryEnsemble, sample_forward
from .madelung import MadelungFields, madelung_decompose, make_stationary_fields
from .potentials import BarrierPotential, HarmonicPotential, make_potential
from .schrodinger import gaussian_packet, propagate_crank_nicolson
from .stationary import RESIDUAL_TOL, solve_stationary_ground
from .svgplot import line_plot
from .trajio import (sha256_of_arrays, sha256_of_file, write_autocorrelation_csv,
                     write_ensemble_binary, write_ensemble_csv, write_fields_csv,
                     write_fpt_csv, write_histogram_csv, write_spectrum_csv,
                     write_stationary_csv, write_variational_csv)
from .variational import (ActionFunctionalSpec, estimate_action_functionals,
                          estimate_mean_energy)

OUTDIR_ENV = "STOCHMECH_OUTDIR"

# analyses that need field tables, unavailable when re-analyzing a bare binary
_FIELD_ANALYSES = ("actions", "fields")


@dataclass(frozen=True)
class GateCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class RunResult:
    manifest: dict
    gates: List[GateCheck]
    outdir: Path
    outputs: List[Path]

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)


class _Member:
    """One simulated unit: fields + ensemble (+ scenario-specific extras)."""

    def __init__(self, label: str, fields: MadelungFields, ensemble: TrajectoryEnsemble,
                 potential, mean_trajectory: Optional[np.ndarray] = None,
                 extra_writers: Optional[list] = None):
        self.label = label
        self.fields = fields
        self.ensemble = ensemble
        self.potential = potential
        self.mean_trajectory = mean_trajectory
        self.extra_writers = extra_writers or []


def resolve_outdir(config: ScenarioConfig, override: Optional[str]) -> Path:
    if override:
        return Path(override)
    if config.outdir:
        return Path(config.outdir)
    env = os.environ.get(OUTDIR_ENV)
    if env:
        return Path(env)
    return Path(".")


def _cdf_from_density(xs: np.ndarray, rho: np.ndarray) -> Callable:
    cum = cumulative_trapezoid(rho, x=xs, initial=0.0)
    cum /= cum[-1]
    return lambda q: np.interp(q, xs, cum)


def _sde_config(config: ScenarioConfig) -> SdeConfig:
    return SdeConfig(dt_sde=config.dt_sde, n_paths=config.n_paths,
                     seed=config.seed, direction="forward",
                     boundary_policy=config.boundary_policy,
                     record_every=config.record_every)


def _build_coherent_members(config: ScenarioConfig) -> List[_Member]:
    members = []
    n_slices = int(round(config.horizon / config.grid.dt_pde))
    times = config.grid.dt_pde * np.arange(n_slices + 1)
    for n_mean in config.n_means:
        label = f"n{n_mean:g}_" if len(config.n_means) > 1 else ""
        spec = CoherentStateSpec(omega=config.omega, n_mean=n_mean,
                                 params=config.params)
        field = coherent_wavefield(spec, config.grid, times)
        fields = madelung_decompose(field, config.params)
        ensemble = sample_forward(fields, _sde_config(config), config.params)
        x_cl, _ = classical_trajectory(spec, ensemble.field_times)
        potential = HarmonicPotential(omega=config.omega, mass=config.params.mass)
        members.append(_Member(label, fields, ensemble, potential,
                               mean_trajectory=x_cl))
    return members


def _build_stationary_member(config: ScenarioConfig, gates: List[GateCheck]) -> _Member:
    if config.kind == "stationary_ground":
        potential = HarmonicPotential(omega=config.omega, mass=config.params.mass)
    else:
        potential = make_potential(config.potential_variant, **config.potential_params)
    solution = solve_stationary_ground(potential, config.e_bracket, config.grid,
                                       config.params)
    gates.append(GateCheck("stationary_converged", solution.converged,
                           f"E={solution.energy!r} iterations={solution.iterations}"))
    gates.append(GateCheck("stationary_residual", solution.residual_sup < RESIDUAL_TOL,
                           f"residual_sup={solution.residual_sup:.3e}"))
    g = config.grid
    grid_sde = build_grid(g.x_min, g.x_max, g.n_points, config.dt_sde)
    fields = make_stationary_fields(grid_sde, np.zeros(g.n_points),
                                    solution.u_profile, solution.rho, config.horizon)
    ensemble = sample_forward(fields, _sde_config(config), config.params)

    def write_json(path):
        payload = {"E": solution.energy, "tol": solution.energy_tol,
                   "iterations": solution.iterations,
                   "residual_sup": solution.residual_sup}
        with open(path, "w", newline="") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    extra = [("stationary.csv", lambda p: write_stationary_csv(solution, p)),
             ("stationary.json", write_json)]
    return _Member("", fields, ensemble, potential, extra_writers=extra)


def _build_barrier_member(config: ScenarioConfig, gates: List[GateCheck]) -> _Member:
    potential = BarrierPotential(height=config.barrier["height"],
                                 width=config.barrier["width"],
                                 center=config.barrier["center"])
    psi0 = gaussian_packet(config.grid, config.packet["x0"],
                           config.packet["sigma"], config.packet["k0"])
    n_steps = int(round(config.horizon / config.grid.dt_pde))
    store_every = max(1, int(round(0.01 / config.grid.dt_pde)))
    while n_steps % store_every:
        store_every -= 1
    field = propagate_crank_nicolson(psi0, config.grid, potential, config.params,
                                     n_steps, store_every=store_every)
    fields = madelung_decompose(field, config.params)
    ensemble = sample_forward(fields, _sde_config(config), config.params)
    edge = config.barrier["center"] + config.barrier["width"]
    final = ensemble.paths[:, -1]
    transmitted = int(np.count_nonzero(final[~ensemble.absorbed] > edge))
    gates.append(GateCheck("transmission", transmitted > 0,
                           f"{transmitted} of {ensemble.n_paths} paths beyond the barrier"))
    return _Member("", fields, ensemble, potential)


def _fpt_region(config: ScenarioConfig) -> tuple:
    a = config.analysis
    if config.kind == "barrier_tunneling":
        lo = a.fpt_lo if a.fpt_lo is not None else (config.barrier["center"]
                                                    - config.barrier["width"])
        hi = a.fpt_hi if a.fpt_hi is not None else (config.barrier["center"]
                                                    + config.barrier["width"])
        return lo, hi
    lo = a.fpt_lo if a.fpt_lo is not None else 1.0
    hi = a.fpt_hi if a.fpt_hi is not None else math.inf
    return lo, hi


def _member_analyses(member: _Member, config: ScenarioConfig,
                     gates: List[GateCheck], writers: list,
                     variational_rows: list) -> None:
    a = config.analysis
    ens = member.ensemble
    fields = member.fields
    label = member.label

    final_rho = fields.rho[-1]
    cdf = _cdf_from_density(fields.grid.points, final_rho)
    alive = ~(ens.absorbed_at < ens.times[-1])
    if int(alive.sum()) >= 100:
        ks = ks_distance(ens.paths[alive, -1], cdf)
        gates.append(GateCheck(f"{label}born_rule_ks", ks < a.ks_budget,
                               f"KS={ks:.4f} budget={a.ks_budget}"))
    else:
        gates.append(GateCheck(f"{label}born_rule_ks", True,
                               "skipped: fewer than 100 surviving paths"))

    for name, write in member.extra_writers:
        writers.append((label + name, write))

    if "density" in a.analyses:
        t_d = a.density_time if a.density_time is not None else ens.times[-1]
        hist = empirical_density(ens, t_d, bins=a.bins)
        writers.append((f"{label}density.csv",
                        lambda p, h=hist: write_histogram_csv(h, p)))
        writers.append((f"{label}density.svg",
                        lambda p, h=hist: line_plot(h.bin_centers, [h.density], p,
                                                    title="position density",
                                                    xlabel="x", ylabel="density")))
    if "trajectories" in a.analyses:
        writers.append((f"{label}ensemble.bin",
                        lambda p, e=ens: write_ensemble_binary(e, p)))
        writers.append((f"{label}ensemble.csv",
                        lambda p, e=ens: write_ensemble_csv(e, p, max_paths=a.csv_paths)))
        n_show = min(a.csv_paths, ens.n_paths)
        writers.append((f"{label}paths.svg",
                        lambda p, e=ens, n=n_show: line_plot(
                            e.times, [e.paths[i] for i in range(n)], p,
                            title="sample paths", xlabel="t", ylabel="x")))
    if "autocorrelation" in a.analyses:
        acf = autocorrelation(ens, a.max_lag, mean_trajectory=member.mean_trajectory)
        writers.append((f"{label}autocorrelation.csv",
                        lambda p, r=acf: write_autocorrelation_csv(r, p)))
        writers.append((f"{label}autocorrelation.svg",
                        lambda p, r=acf: line_plot(r.lags, [r.values], p,
                                                   title="position autocorrelation",
                                                   xlabel="tau", ylabel="C")))
    if "psd" in a.analyses:
        spec = power_spectral_density(ens, a.segment_length, a.overlap,
                                      mean_trajectory=member.mean_trajectory)
        writers.append((f"{label}psd.csv",
                        lambda p, r=spec: write_spectrum_csv(r, p)))
        writers.append((f"{label}psd.svg",
                        lambda p, r=spec: line_plot(r.omega, [r.psd], p,
                                                    title="power spectral density",
                                                    xlabel="angular frequency",
                                                    ylabel="psd")))
    if "fpt" in a.analyses:
        region = _fpt_region(config)
        sense = a.fpt_sense
        if sense == "traverse" and not math.isfinite(region[1]):
            sense = "enter"
        fpt = first_passage_times(ens, region, sense=sense)
        gates.append(GateCheck(f"{label}fpt_nonempty", not fpt.empty,
                               f"{fpt.qualified.size} qualifying, "
                               f"{fpt.censored_absorbed} absorbed-censored, "
                               f"{fpt.censored_horizon} horizon-censored"))
        writers.append((f"{label}fpt.csv", lambda p, r=fpt: write_fpt_csv(r, p)))
        q = np.sort(fpt.qualified)
        if q.size:
            ranks = np.arange(1, q.size + 1) / fpt.n_eligible
            writers.append((f"{label}fpt.svg",
                            lambda p, x=q, y=ranks: line_plot(
                                x, [y], p, title=f"first-passage CDF ({sense})",
                                xlabel="t", ylabel="fraction passed")))
    if "actions" in a.analyses:
        spec_af = ActionFunctionalSpec(horizon=config.horizon)
        est = estimate_action_functionals(ens, fields, member.potential,
                                          config.params, spec_af)
        series = estimate_mean_energy(ens, fields, member.potential, config.params)
        scen = config.name + (f"/{label.rstrip('_')}" if label else "")
        variational_rows.extend([
            {"functional": "J_R", "estimate": est.j_r, "stderr": est.j_r_stderr,
             "n_paths": est.n_paths, "dt_sde": ens.dt_sde, "scenario": scen},
            {"functional": "J_I", "estimate": est.j_i, "stderr": est.j_i_stderr,
             "n_paths": est.n_paths, "dt_sde": ens.dt_sde, "scenario": scen},
            {"functional": "J_complex_re", "estimate": est.j_complex.real,
             "stderr": est.j_r_stderr, "n_paths": est.n_paths,
             "dt_sde": ens.dt_sde, "scenario": scen},
            {"functional": "J_complex_im", "estimate": est.j_complex.imag,
             "stderr": est.j_i_stderr, "n_paths": est.n_paths,
             "dt_sde": ens.dt_sde, "scenario": scen},
            {"functional": "E_mean", "estimate": float(series.values.mean()),
             "stderr": float(series.stderr.mean()), "n_paths": series.n_paths,
             "dt_sde": ens.dt_sde, "scenario": scen},
            {"functional": "E_slope", "estimate": series.slope,
             "stderr": series.slope_stderr, "n_paths": series.n_paths,
             "dt_sde": ens.dt_sde, "scenario": scen},
        ])
    if "fields" in a.analyses:
        writers.append((f"{label}fields.csv",
                        lambda p, f=fields: write_fields_csv(f, p)))


def emit_outputs(writers: list, outdir: Path) -> List[Path]:
    """Write each (name, fn) atomically; on failure remove everything."""
    outdir.mkdir(parents=True, exist_ok=True)
    created: List[Path] = []
    tmp: Optional[Path] = None
    try:
        for name, write in writers:
            target = outdir / name
            tmp = outdir / (name + ".tmp")
            write(tmp)
            os.replace(tmp, target)
            tmp = None
            created.append(target)
    except BaseException:
        if tmp is not None and tmp.exists():
            tmp.unlink()
        for p in created:
            if p.exists():
                p.unlink()
        raise
    return created


def run_scenario(config: ScenarioConfig, outdir: Optional[str] = None,
                 threads: Optional[int] = None) -> RunResult:
    """Execute one scenario end to end and emit its artifacts.

    threads is accepted for interface compatibility; computation is
    single-threaded per scenario and results never depend on it.
    """
    del threads
    start = time.monotonic()
    gates: List[GateCheck] = []
    writers: list = []
    variational_rows: list = []

    if config.kind == "coherent_oscillator":
        members = _build_coherent_members(config)
    elif config.kind in ("stationary_ground", "custom_potential"):
        members = [_build_stationary_member(config, gates)]
    else:
        members = [_build_barrier_member(config, gates)]

    for member in members:
        _member_analyses(member, config, gates, writers, variational_rows)
    if variational_rows:
        writers.append(("variational.csv",
                        lambda p: write_variational_csv(variational_rows, p)))

    field_checksum = sha256_of_arrays(*[arr for m in members for arr in
                                        (m.fields.rho, m.fields.S, m.fields.v,
                                         m.fields.u)])

    out = resolve_outdir(config, outdir)
    outputs = emit_outputs(writers, out)

    manifest = {
        "tool": "stochmech",
        "version": __version__,
        "scenario": config.name,
        "kind": config.kind,
        "seed": config.seed,
        "config_echo": render_config(config),
        "field_checksum": field_checksum,
        "wall_clock_seconds": round(time.monotonic() - start, 3),
        "gates": [{"name": g.name, "passed": g.passed, "detail": g.detail}
                  for g in gates],
        "outputs": [{"file": p.name, "sha256": sha256_of_file(p)} for p in outputs],
    }
    manifest_tmp = out / "manifest.json.tmp"
    with open(manifest_tmp, "w", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(manifest_tmp, out / "manifest.json")
    return RunResult(manifest=manifest, gates=gates, outdir=out, outputs=outputs)


def analyze_binary(binary: dict, config: ScenarioConfig,
                   outdir: Optional[str] = None) -> RunResult:
    """Re-run ensemble-only analyses on a stored trajectory table."""
    for name in config.analysis.analyses:
        if name in _FIELD_ANALYSES:
            raise ConfigError(f"analysis {name!r} needs field data and cannot "
                              "run from a trajectory binary alone")
    times = binary["times"]
    paths = binary["paths"]
    ens = TrajectoryEnsemble(times=times, paths=paths, direction="forward",
                             seed=config.seed,
                             stream_ids=2 * np.arange(paths.shape[0], dtype=np.int64),
                             absorbed_at=binary["absorbed_at"],
                             dt_sde=float(times[1] - times[0]) if times.size > 1 else 1.0,
                             boundary_policy=config.boundary_policy)
    start = time.monotonic()
    gates: List[GateCheck] = []
    writers: list = []
    a = config.analysis
    if "density" in a.analyses:
        t_d = a.density_time if a.density_time is not None else ens.times[-1]
        hist = empirical_density(ens, t_d, bins=a.bins)
        writers.append(("density.csv", lambda p, h=hist: write_histogram_csv(h, p)))
    if "autocorrelation" in a.analyses:
        acf = autocorrelation(ens, a.max_lag)
        writers.append(("autocorrelation.csv",
                        lambda p, r=acf: write_autocorrelation_csv(r, p)))
    if "psd" in a.analyses:
        spec = power_spectral_density(ens, a.segment_length, a.overlap)
        writers.append(("psd.csv", lambda p, r=spec: write_spectrum_csv(r, p)))
    if "fpt" in a.analyses:
        region = _fpt_region(config)
        sense = a.fpt_sense
        if sense == "traverse" and not math.isfinite(region[1]):
            sense = "enter"
        fpt = first_passage_times(ens, region, sense=sense)
        gates.append(GateCheck("fpt_nonempty", not fpt.empty,
                               f"{fpt.qualified.size} qualifying"))
        writers.append(("fpt.csv", lambda p, r=fpt: write_fpt_csv(r, p)))

    out = resolve_outdir(config, outdir)
    outputs = emit_outputs(writers, out)
    manifest = {
        "tool": "stochmech",
        "version": __version__,
        "scenario": config.name,
        "kind": "analyze",
        "seed": config.seed,
        "config_echo": render_config(config),
        "field_checksum": sha256_of_arrays(times, paths),
        "wall_clock_seconds": round(time.monotonic() - start, 3),
        "gates": [{"name": g.name, "passed": g.passed, "detail": g.detail}
                  for g in gates],
        "outputs": [{"file": p.name, "sha256": sha256_of_file(p)} for p in outputs],
    }
    manifest_tmp = out / "manifest.json.tmp"
    with open(manifest_tmp, "w", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(manifest_tmp, out / "manifest.json")
    return RunResult(manifest=manifest, gates=gates, outdir=out, outputs=outputs)


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    mismatched: tuple
    missing: tuple
    scratch: str


def replay(manifest_path: str, workdir: Optional[str] = None) -> ReplayReport:
    """Re-run a manifest's config echo and diff every recorded output hash."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    config = parse_config(manifest["config_echo"])
    if config.seed != manifest["seed"]:
        raise ConfigError("manifest seed disagrees with its config echo")

    ctx = (tempfile.TemporaryDirectory() if workdir is None else None)
    scratch = Path(ctx.name if ctx else workdir)
    try:
        result = run_scenario(config, outdir=str(scratch))
        produced = {p.name: p for p in result.outputs}
        mismatched = []
        missing = []
        for entry in manifest["outputs"]:
            name = entry["file"]
            if name not in produced:
                missing.append(name)
            elif sha256_of_file(produced[name]) != entry["sha256"]:
                mismatched.append(name)
        ok = not mismatched and not missing
        return ReplayReport(ok=ok, mismatched=tuple(mismatched),
                            missing=tuple(missing), scratch=str(scratch))
    finally:
        if ctx:
            ctx.cleanup()
