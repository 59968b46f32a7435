"""Forward and backward diffusion sampling driven by Madelung drift tables.

Both directions integrate dx = b dt + sqrt(hbar/m) dW with Euler-Maruyama:
forward with b = v + u, backward as the time-reversed coordinate y(s) =
x(T - s) with b = u - v, which realizes the backward equation as an ordinary
forward integration.  Every path owns a counter-based RNG stream keyed by
(seed, path index), so ensembles are bit-reproducible regardless of step
blocking, path chunking or lane (compiled vs fallback kernel).
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import integrate_block
from .errors import FieldCoverageError
from .grid import GridSpec, PhysicalParams
from .madelung import MadelungFields

# per-block noise buffer budget in float64 entries (~128 MB)
_NOISE_BUDGET = 16_777_216

_BOUNDARY_CODES = {"reflect": 0, "absorb": 1}


@dataclass(frozen=True)
class SdeConfig:
    """Sampling parameters for one ensemble.

    record_every thins the stored trajectory (positions kept every
    record_every-th step); it never affects the integration itself.
    """

    dt_sde: float
    n_paths: int
    seed: int
    direction: str = "forward"
    boundary_policy: str = "reflect"
    record_every: int = 1

    def __post_init__(self) -> None:
        if not (self.dt_sde > 0 and np.isfinite(self.dt_sde)):
            raise ValueError("dt_sde must be positive and finite")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 bits")
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"direction must be forward or backward, got {self.direction!r}")
        if self.boundary_policy not in _BOUNDARY_CODES:
            raise ValueError(
                f"boundary_policy must be reflect or absorb, got {self.boundary_policy!r}"
            )
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Recorded paths on the ensemble's own clock.

    times run 0..T in integration order.  For backward ensembles the
    integration clock s maps to field time T - s (see field_times).
    absorbed_at holds the clock time a path froze (wall hit under the absorb
    policy, or non-finite drift update); NaN means the path ran the full
    horizon.  Frozen paths keep their last coordinate in later records.
    """

    times: np.ndarray
    paths: np.ndarray
    direction: str
    seed: int
    stream_ids: np.ndarray
    absorbed_at: np.ndarray
    dt_sde: float
    boundary_policy: str
    t0_field: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def absorbed(self) -> np.ndarray:
        """Boolean absorbed-flag per path."""
        return np.isfinite(self.absorbed_at)

    @property
    def field_times(self) -> np.ndarray:
        """Recorded times translated to the field's clock."""
        if self.direction == "forward":
            return self.t0_field + self.times
        return self.t0_field - self.times

    def clock_of_field_time(self, t: float) -> float:
        """Map a field time onto this ensemble's integration clock."""
        if self.direction == "forward":
            return t - self.t0_field
        return self.t0_field - t

    def nearest_record_index(self, t_clock: float) -> int:
        return int(np.argmin(np.abs(self.times - t_clock)))


def _path_generators(seed: int, n_paths: int, offset: int, dir_bit: int):
    """One Philox stream per path, keyed by (seed, 2*path_index + dir_bit).

    The direction bit keeps forward and backward ensembles under the same
    seed statistically independent while preserving per-path pairing of
    forward runs (common random numbers) across re-simulations.
    """
    gens = []
    for p in range(n_paths):
        key = np.array([seed, 2 * (offset + p) + dir_bit], dtype=np.uint64)
        gens.append(np.random.Generator(np.random.Philox(key=key)))
    return gens


def sample_initial_positions(rho0: np.ndarray, grid: GridSpec, n_paths: int,
                             seed: int, *, _gens=None) -> np.ndarray:
    """Draw i.i.d. start positions from a grid density via inverse-CDF.

    The cumulative integral of rho0 (trapezoid) is treated as a
    piecewise-linear CDF and inverted exactly, one uniform variate per path
    taken as the first draw of that path's stream.
    """
    rho0 = np.asarray(rho0, dtype=np.float64)
    if rho0.shape != (grid.n_points,):
        raise ValueError("rho0 must be sampled on the grid nodes")
    if np.any(rho0 < 0):
        raise ValueError("rho0 must be non-negative")
    total = float(np.trapezoid(rho0, dx=grid.dx))
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"rho0 integrates to {total:.6f}, not 1")
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * grid.dx * (rho0[1:] + rho0[:-1]))))
    cdf /= cdf[-1]

    gens = _gens if _gens is not None else _path_generators(seed, n_paths, 0, 0)
    uniforms = np.fromiter((g.random() for g in gens), dtype=np.float64, count=n_paths)
    x = grid.points
    idx = np.searchsorted(cdf, uniforms, side="right") - 1
    idx = np.clip(idx, 0, grid.n_points - 2)
    seg = cdf[idx + 1] - cdf[idx]
    frac = np.where(seg > 0, (uniforms - cdf[idx]) / np.where(seg > 0, seg, 1.0), 0.0)
    return x[idx] + frac * grid.dx


def _time_lookup(n_steps: int, dt_sde: float, stored_times: np.ndarray):
    """it_idx/it_frac pairs mapping each global step time onto slice rows."""
    n_slices = stored_times.size
    if n_slices == 1:
        it_idx = np.zeros(n_steps, dtype=np.int64)
        return it_idx, np.zeros(n_steps, dtype=np.float64)
    spacing = float(stored_times[1] - stored_times[0])
    tau = (np.arange(n_steps, dtype=np.float64) * dt_sde) / spacing
    it_idx = np.minimum(np.floor(tau).astype(np.int64), n_slices - 2)
    it_frac = tau - it_idx.astype(np.float64)
    return it_idx, it_frac


def _integrate(drift_table: np.ndarray, stored_times: np.ndarray, grid: GridSpec,
               x0: np.ndarray, gens, config: SdeConfig, n_steps: int,
               diffusion: float) -> tuple:
    """Shared stepping loop for both directions; returns (paths, absorbed_at)."""
    n_paths = x0.size
    re = config.record_every
    if n_steps % re != 0:
        raise ValueError("record_every must divide the step count")
    n_rec = n_steps // re + 1
    out = np.empty((n_paths, n_rec), dtype=np.float64)
    out[:, 0] = x0
    absorbed_step = np.full(n_paths, np.nan)
    x = x0.copy()

    it_idx, it_frac = _time_lookup(n_steps, config.dt_sde, stored_times)
    inv_dx = 1.0 / grid.dx
    sigma_dt = np.sqrt(config.dt_sde * diffusion)

    block = max(1, min(n_steps, _NOISE_BUDGET // n_paths))
    boundary = _BOUNDARY_CODES[config.boundary_policy]
    k0 = 0
    while k0 < n_steps:
        bs = min(block, n_steps - k0)
        noise = np.empty((n_paths, bs), dtype=np.float64)
        for p in range(n_paths):
            noise[p] = gens[p].standard_normal(bs)
        integrate_block(x, drift_table, it_idx, it_frac, grid.x_min, grid.x_max,
                        inv_dx, grid.n_points, config.dt_sde, sigma_dt, noise,
                        k0, re, boundary, out, absorbed_step)
        k0 += bs

    absorbed_at = (absorbed_step + 1.0) * config.dt_sde
    return out, absorbed_at


def _sample(fields: MadelungFields, config: SdeConfig, params: PhysicalParams,
            rho0: np.ndarray, drift_table: np.ndarray, stored_times: np.ndarray,
            dir_bit: int, t0_field: float, path_offset: int) -> TrajectoryEnsemble:
    grid = fields.grid
    if config.dt_sde > grid.dt_pde * (1.0 + 1e-9):
        raise ValueError(
            f"dt_sde={config.dt_sde} exceeds the field time step dt_pde={grid.dt_pde}"
        )
    horizon = float(stored_times[-1] - stored_times[0])
    if stored_times.size < 2 or horizon <= 0:
        raise FieldCoverageError("field coverage: need at least two stored time slices")
    n_steps = int(round(horizon / config.dt_sde))
    if n_steps < 1 or abs(n_steps * config.dt_sde - horizon) > 1e-6 * config.dt_sde:
        raise FieldCoverageError(
            f"field coverage: dt_sde={config.dt_sde} does not divide the stored "
            f"window T={horizon}"
        )
    spacings = np.diff(stored_times)
    if not np.allclose(spacings, spacings[0], rtol=1e-9, atol=0.0):
        raise ValueError("stored field times must be uniformly spaced")

    gens = _path_generators(config.seed, config.n_paths, path_offset, dir_bit)
    x0 = sample_initial_positions(rho0, grid, config.n_paths, config.seed, _gens=gens)
    paths, absorbed_at = _integrate(np.ascontiguousarray(drift_table), stored_times,
                                    grid, x0, gens, config, n_steps, params.diffusion)
    rec_times = config.dt_sde * config.record_every * np.arange(paths.shape[1])
    stream_ids = 2 * (path_offset + np.arange(config.n_paths, dtype=np.int64)) + dir_bit
    return TrajectoryEnsemble(times=rec_times, paths=paths, direction=config.direction,
                              seed=config.seed, stream_ids=stream_ids,
                              absorbed_at=absorbed_at, dt_sde=config.dt_sde,
                              boundary_policy=config.boundary_policy, t0_field=t0_field)


def sample_forward(fields: MadelungFields, config: SdeConfig, params: PhysicalParams,
                   rho0: np.ndarray | None = None, *,
                   path_offset: int = 0) -> TrajectoryEnsemble:
    """Integrate dx = (v+u) dt + sqrt(hbar/m) dW over the stored field window.

    rho0 defaults to the field density at the first stored time.  path_offset
    shifts the per-path stream keys so a large ensemble can be built in
    chunks that are bit-identical to one big run.
    """
    if config.direction != "forward":
        raise ValueError("config.direction must be 'forward'")
    if rho0 is None:
        rho0 = fields.rho[0]
    drift = fields.v + fields.u
    return _sample(fields, config, params, rho0, drift, fields.times,
                   dir_bit=0, t0_field=float(fields.times[0]), path_offset=path_offset)


def sample_backward(fields: MadelungFields, config: SdeConfig, params: PhysicalParams,
                    rhoT: np.ndarray | None = None, *,
                    path_offset: int = 0) -> TrajectoryEnsemble:
    """Integrate the reversed coordinate y(s) = x(T-s) with drift u - v.

    rhoT defaults to the field density at the last stored time.  The returned
    ensemble's clock runs s = 0..T; use field_times to map back.
    """
    if config.direction != "backward":
        raise ValueError("config.direction must be 'backward'")
    if rhoT is None:
        rhoT = fields.rho[-1]
    drift = (fields.u - fields.v)[::-1]
    # reversed slices are uniform in s with the same spacing
    s_times = fields.times[-1] - fields.times[::-1]
    return _sample(fields, config, params, rhoT, drift, s_times,
                   dir_bit=1, t0_field=float(fields.times[-1]), path_offset=path_offset)


def interpolate_table(stored_times: np.ndarray, table: np.ndarray, grid: GridSpec,
                      x, t: float) -> np.ndarray:
    """Bilinear lookup of a (n_times, n_points) table at positions x, time t.

    Linear in x and t, exact on affine fields.  x is clipped to the grid;
    t outside the stored range raises FieldCoverageError.
    """
    t = float(t)
    t_lo, t_hi = float(stored_times[0]), float(stored_times[-1])
    span = max(abs(t_lo), abs(t_hi), 1.0)
    if t < t_lo - 1e-9 * span or t > t_hi + 1e-9 * span:
        raise FieldCoverageError(
            f"field coverage: t={t} outside stored range [{t_lo}, {t_hi}]"
        )
    x = np.clip(np.asarray(x, dtype=np.float64), grid.x_min, grid.x_max)
    if stored_times.size == 1:
        it, ft = 0, 0.0
    else:
        spacing = float(stored_times[1] - stored_times[0])
        tau = (t - t_lo) / spacing
        it = min(int(np.floor(tau)), stored_times.size - 2)
        it = max(it, 0)
        ft = tau - it
    pos = (x - grid.x_min) / grid.dx
    ix = np.clip(np.floor(pos).astype(np.int64), 0, grid.n_points - 2)
    fx = pos - ix
    wl = 1.0 - fx
    row0, row1 = table[it], table[min(it + 1, table.shape[0] - 1)]
    b0 = wl * row0[ix] + fx * row0[ix + 1]
    b1 = wl * row1[ix] + fx * row1[ix + 1]
    return (1.0 - ft) * b0 + ft * b1


def interpolate_velocity(fields: MadelungFields, x, t: float):
    """(v, u) at positions x and field time t via bilinear interpolation."""
    v = interpolate_table(fields.times, fields.v, fields.grid, x, t)
    u = interpolate_table(fields.times, fields.u, fields.grid, x, t)
    return v, u


@dataclass(frozen=True)
class MeanDerivativeResult:
    """Binned conditional difference-quotient estimates at one time."""

    bin_centers: np.ndarray
    bin_mean_x: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    flagged: np.ndarray
    delta_t: float
    direction: str
    t_field: float


def _binned_quotient(x_cond: np.ndarray, quotient: np.ndarray, edges: np.ndarray,
                     min_count: int):
    idx = np.digitize(x_cond, edges) - 1
    n_bins = edges.size - 1
    in_range = (idx >= 0) & (idx < n_bins)
    idx = idx[in_range]
    q = quotient[in_range]
    xs = x_cond[in_range]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=q, minlength=n_bins)
    sums_x = np.bincount(idx, weights=xs, minlength=n_bins)
    sums2 = np.bincount(idx, weights=q * q, minlength=n_bins)
    safe = np.maximum(counts, 1)
    mean = sums / safe
    mean_x = sums_x / safe
    var = np.maximum(sums2 / safe - mean**2, 0.0)
    stderr = np.sqrt(var / np.maximum(counts - 1, 1))
    flagged = counts < min_count
    return mean_x, mean, stderr, counts, flagged


def mean_derivative(ensemble: TrajectoryEnsemble, fields: MadelungFields, t: float,
                    delta_t: float | None = None, bin_width: float | None = None,
                    direction: str = "forward", observable=None,
                    x_range: tuple | None = None,
                    min_count: int = 50) -> MeanDerivativeResult:
    """Conditional mean derivative of an observable, binned over position.

    direction='forward' estimates D_f h = E[(h(t+dt') - h(t))/dt' | x(t)];
    'backward' estimates D_b h = E[(h(t) - h(t-dt'))/dt' | x(t)], both in
    field time t regardless of how the ensemble was integrated.  observable
    is a callable h(x, t) (default: position).  delta_t defaults to
    10*dt_sde and is rounded to a whole number of recorded strides.  Bins
    with fewer than min_count paths are flagged.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be forward or backward")
    rec_dt = float(ensemble.times[1] - ensemble.times[0]) if ensemble.times.size > 1 else 0.0
    if rec_dt <= 0:
        raise ValueError("ensemble must hold at least two recorded times")
    if delta_t is None:
        delta_t = 10.0 * ensemble.dt_sde
    if delta_t < ensemble.dt_sde * (1.0 - 1e-9):
        raise ValueError("delta_t must be >= dt_sde")
    lag = max(1, int(round(delta_t / rec_dt)))
    delta_t = lag * rec_dt

    # the field-time difference quotient maps onto the ensemble's own clock:
    # on a backward ensemble, +delta_t in field time is -delta_t in s
    s_cond = ensemble.clock_of_field_time(t)
    i_cond = ensemble.nearest_record_index(s_cond)
    along = +1 if (direction == "forward") == (ensemble.direction == "forward") else -1
    i_other = i_cond + along * lag
    if not (0 <= i_other < ensemble.times.size):
        raise ValueError(
            f"t={t} with delta_t={delta_t} leaves the recorded horizon"
        )
    t_cond = float(ensemble.field_times[i_cond])
    t_other = t_cond + (delta_t if direction == "forward" else -delta_t)

    alive = ~ensemble.absorbed
    x_cond = ensemble.paths[alive, i_cond]
    x_other = ensemble.paths[alive, i_other]
    if observable is None:
        h_cond, h_other = x_cond, x_other
    else:
        h_cond = np.asarray(observable(x_cond, t_cond), dtype=np.float64)
        h_other = np.asarray(observable(x_other, t_other), dtype=np.float64)
    if direction == "forward":
        quotient = (h_other - h_cond) / delta_t
    else:
        quotient = (h_cond - h_other) / delta_t

    if x_range is None:
        x_range = (float(x_cond.min()), float(x_cond.max()))
    if bin_width is None:
        bin_width = (x_range[1] - x_range[0]) / 20.0
    n_bins = max(1, int(round((x_range[1] - x_range[0]) / bin_width)))
    edges = x_range[0] + bin_width * np.arange(n_bins + 1)

    mean_x, mean, stderr, counts, flagged = _binned_quotient(x_cond, quotient,
                                                             edges, min_count)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return MeanDerivativeResult(bin_centers=centers, bin_mean_x=mean_x, values=mean,
                                stderr=stderr, counts=counts, flagged=flagged,
                                delta_t=delta_t, direction=direction, t_field=t_cond)


@dataclass(frozen=True)
class NewtonResidualResult:
    """Binned symmetrized mean acceleration against the force law."""

    bin_mean_x: np.ndarray
    acceleration: np.ndarray
    accel_stderr: np.ndarray
    force: np.ndarray
    residual: np.ndarray
    counts_forward: np.ndarray
    counts_backward: np.ndarray
    flagged: np.ndarray
    t_field: float
    delta_t: float


def nelson_newton_residual(ensemble_f: TrajectoryEnsemble, ensemble_b: TrajectoryEnsemble,
                           fields: MadelungFields, potential, params: PhysicalParams,
                           t: float, delta_t: float | None = None,
                           bin_width: float | None = None,
                           x_range: tuple = (-2.0, 2.0),
                           min_count: int = 50) -> NewtonResidualResult:
    """Per-bin residual of m/2 (D_f D_b + D_b D_f) x = F(x) at field time t.

    The nested derivatives are estimated by applying the conditional
    difference quotients to the interpolated fields: D_f acting on (v - u)
    along the forward ensemble and D_b acting on (v + u) along the backward
    ensemble.  The force is evaluated at the pooled per-bin mean position.
    """

    def g_minus(x, tq):
        v, u = interpolate_velocity(fields, x, tq)
        return v - u

    def g_plus(x, tq):
        v, u = interpolate_velocity(fields, x, tq)
        return v + u

    res_f = mean_derivative(ensemble_f, fields, t, delta_t=delta_t,
                            bin_width=bin_width, direction="forward",
                            observable=g_minus, x_range=x_range, min_count=min_count)
    res_b = mean_derivative(ensemble_b, fields, t, delta_t=delta_t,
                            bin_width=bin_width, direction="backward",
                            observable=g_plus, x_range=x_range, min_count=min_count)

    accel = 0.5 * (res_f.values + res_b.values)
    accel_se = 0.5 * np.sqrt(res_f.stderr**2 + res_b.stderr**2)
    total = res_f.counts + res_b.counts
    safe = np.maximum(total, 1)
    mean_x = (res_f.bin_mean_x * res_f.counts + res_b.bin_mean_x * res_b.counts) / safe
    force = np.asarray(potential.force(mean_x), dtype=np.float64)
    residual = params.mass * accel - force
    flagged = res_f.flagged | res_b.flagged
    return NewtonResidualResult(bin_mean_x=mean_x, acceleration=accel,
                                accel_stderr=accel_se, force=force, residual=residual,
                                counts_forward=res_f.counts, counts_backward=res_b.counts,
                                flagged=flagged, t_field=res_f.t_field,
                                delta_t=res_f.delta_t)
