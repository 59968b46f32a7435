"""Monte-Carlo action functionals along path ensembles and saddle probes.

The real pair of functionals estimated here is
    J_R = E[ int ((m/2)(v^2 - u^2) - V) dt + S_o(x(T)) ]
    J_I = -m E[ int v u dt + R_0(x(T)) ]
and the complex combination uses the quantum velocity v_q = v - iu:
    J   = E[ int ((m/2) v_q^2 - V) dt + Phi_T(x(T)) ].
Since (v - iu)^2 = v^2 - u^2 - 2ivu holds bit-exactly in IEEE complex
arithmetic, Re J reproduces J_R on the same samples to round-off.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import PhysicalParams
from .kinematics import (SdeConfig, TrajectoryEnsemble, interpolate_table,
                         sample_forward)
from .madelung import MadelungFields, make_stationary_fields

_CHUNK_PATHS = 8192


@dataclass(frozen=True)
class ActionFunctionalSpec:
    """Horizon and terminal costs of the action functionals.

    All three terminal costs are callables of the terminal position x(T)
    (None means identically zero, the convention when nothing is stated).
    """

    horizon: float
    phi_T: Optional[Callable] = None
    s_o: Optional[Callable] = None
    r_0: Optional[Callable] = None

    def __post_init__(self) -> None:
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")


@dataclass(frozen=True)
class ActionEstimate:
    j_r: float
    j_r_stderr: float
    j_i: float
    j_i_stderr: float
    j_complex: complex
    n_paths: int
    horizon: float


@dataclass(frozen=True)
class EnergySeries:
    """Mean energy E[(m/2)(v^2+u^2) + V] per recorded time with flatness fit."""

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    slope: float
    slope_stderr: float
    n_paths: int


def _terminal(cost, x_T: np.ndarray) -> np.ndarray:
    if cost is None:
        return np.zeros_like(x_T)
    return np.asarray(cost(x_T), dtype=np.float64)


def _fields_along(ensemble: TrajectoryEnsemble, fields: MadelungFields, potential):
    """Yield (chunk_slice, v, u, V) arrays of shape (chunk, n_times)."""
    times = ensemble.field_times
    n_paths = ensemble.n_paths
    for lo in range(0, n_paths, _CHUNK_PATHS):
        hi = min(lo + _CHUNK_PATHS, n_paths)
        x = ensemble.paths[lo:hi]
        v = np.empty_like(x)
        u = np.empty_like(x)
        for j, t in enumerate(times):
            v[:, j] = interpolate_table(fields.times, fields.v, fields.grid, x[:, j], t)
            u[:, j] = interpolate_table(fields.times, fields.u, fields.grid, x[:, j], t)
        v_pot = np.asarray(potential.value(x), dtype=np.float64)
        yield slice(lo, hi), x, v, u, v_pot


def _quad_weights(times: np.ndarray, quadrature: str) -> np.ndarray:
    dt = np.diff(times)
    w = np.zeros(times.size)
    if quadrature == "trapezoid":
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
    elif quadrature == "midpoint":
        # integrand evaluated mid-cell by averaging endpoint values; as a
        # weight vector that is identical to trapezoid, so midpoint mode is
        # handled in the integrand construction instead
        raise ValueError("midpoint weights are built in the integrand path")
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    return w


def estimate_action_functionals(ensemble: TrajectoryEnsemble, fields: MadelungFields,
                                potential, params: PhysicalParams,
                                spec: ActionFunctionalSpec,
                                quadrature: str = "trapezoid") -> ActionEstimate:
    """J_R, J_I and the complex action with jackknife standard errors.

    quadrature 'trapezoid' evaluates the integrand at recorded times;
    'midpoint' evaluates fields at the path midpoint (x_k + x_{k+1})/2 and
    mid-cell time, the time-symmetric alternative (differs at O(dt)).
    For a mean over per-path integrals the jackknife collapses to the
    standard error of the per-path values, which is what is reported.
    """
    if quadrature not in ("trapezoid", "midpoint"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    times = ensemble.field_times
    horizon = float(abs(times[-1] - times[0]))
    if abs(horizon - spec.horizon) > 1e-9 * max(1.0, spec.horizon):
        raise ValueError(
            f"ensemble horizon {horizon} does not match spec horizon {spec.horizon}"
        )
    m = params.mass
    n_paths = ensemble.n_paths
    alive = ~ensemble.absorbed

    jr = np.empty(n_paths)
    ji = np.empty(n_paths)
    jc = np.empty(n_paths, dtype=np.complex128)

    if quadrature == "trapezoid":
        w = _quad_weights(ensemble.times, "trapezoid")
        for sl, x, v, u, v_pot in _fields_along(ensemble, fields, potential):
            vq = v - 1j * u
            lr = (0.5 * m) * (v * v - u * u) - v_pot
            li = v * u
            lc = (0.5 * m) * (vq * vq) - v_pot
            jr[sl] = lr @ w
            ji[sl] = li @ w
            jc[sl] = lc @ w
            x_T = x[:, -1]
            jr[sl] += _terminal(spec.s_o, x_T)
            ji[sl] += _terminal(spec.r_0, x_T)
            jc[sl] += _terminal(spec.phi_T, x_T)
    else:
        dt_cells = np.diff(ensemble.times)
        mid_times = 0.5 * (times[:-1] + times[1:])
        for lo in range(0, n_paths, _CHUNK_PATHS):
            hi = min(lo + _CHUNK_PATHS, n_paths)
            x = ensemble.paths[lo:hi]
            xm = 0.5 * (x[:, :-1] + x[:, 1:])
            v = np.empty_like(xm)
            u = np.empty_like(xm)
            for j, t in enumerate(mid_times):
                v[:, j] = interpolate_table(fields.times, fields.v, fields.grid,
                                            xm[:, j], t)
                u[:, j] = interpolate_table(fields.times, fields.u, fields.grid,
                                            xm[:, j], t)
            v_pot = np.asarray(potential.value(xm), dtype=np.float64)
            vq = v - 1j * u
            lr = (0.5 * m) * (v * v - u * u) - v_pot
            li = v * u
            lc = (0.5 * m) * (vq * vq) - v_pot
            jr[lo:hi] = lr @ dt_cells
            ji[lo:hi] = li @ dt_cells
            jc[lo:hi] = lc @ dt_cells
            x_T = x[:, -1]
            jr[lo:hi] += _terminal(spec.s_o, x_T)
            ji[lo:hi] += _terminal(spec.r_0, x_T)
            jc[lo:hi] += _terminal(spec.phi_T, x_T)

    jr = jr[alive]
    ji = ji[alive]
    jc = jc[alive]
    n = jr.size
    if n < 2:
        raise ValueError("need at least two surviving paths")
    ji_scaled = -m * ji
    return ActionEstimate(
        j_r=float(jr.mean()),
        j_r_stderr=float(jr.std(ddof=1) / math.sqrt(n)),
        j_i=float(ji_scaled.mean()),
        j_i_stderr=float(ji_scaled.std(ddof=1) / math.sqrt(n)),
        j_complex=complex(jc.mean()),
        n_paths=n,
        horizon=horizon,
    )


def estimate_mean_energy(ensemble: TrajectoryEnsemble, fields: MadelungFields,
                         potential, params: PhysicalParams) -> EnergySeries:
    """E(t) = E[(m/2)(v^2 + u^2) + V(x(t))] with a per-path flatness fit.

    The slope standard error comes from the spread of per-path regression
    slopes, which respects the within-path time correlation that a naive
    pooled fit would ignore.
    """
    m = params.mass
    times = ensemble.field_times
    n_paths = ensemble.n_paths
    alive = ~ensemble.absorbed

    e_paths = np.empty((n_paths, times.size))
    for sl, x, v, u, v_pot in _fields_along(ensemble, fields, potential):
        e_paths[sl] = (0.5 * m) * (v * v + u * u) + v_pot
    e_paths = e_paths[alive]
    n = e_paths.shape[0]
    if n < 2:
        raise ValueError("need at least two surviving paths")

    values = e_paths.mean(axis=0)
    stderr = e_paths.std(axis=0, ddof=1) / math.sqrt(n)

    tc = times - times.mean()
    denom = float(tc @ tc)
    slopes = (e_paths @ tc) / denom
    slope = float(slopes.mean())
    slope_se = float(slopes.std(ddof=1) / math.sqrt(n))
    return EnergySeries(times=times.copy(), values=values, stderr=stderr,
                        slope=slope, slope_stderr=slope_se, n_paths=n)


@dataclass(frozen=True)
class Perturbation:
    """Drift perturbation for a saddle probe: delta(x) = amplitude * shape(x)."""

    target: str
    shape: object
    amplitude: float

    def __post_init__(self) -> None:
        if self.target not in ("v", "u"):
            raise ValueError("perturbation target must be 'v' or 'u'")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")

    def delta(self, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.asarray(self.shape(x), dtype=np.float64)


@dataclass(frozen=True)
class ProbeResult:
    delta_j_r: float
    stderr: float
    n_sigma: float
    conclusive: bool
    target: str
    amplitude: float
    n_paths: int


def saddle_point_probe(fields: MadelungFields, potential, params: PhysicalParams,
                       config: SdeConfig, spec: ActionFunctionalSpec,
                       perturbation: Perturbation,
                       quadrature: str = "trapezoid") -> ProbeResult:
    """Paired comparison of J_R between base and perturbed drifts.

    Perturbing v probes the minimizing direction of the saddle: the paths
    keep the physical law (unchanged drift), only the integrand sees
    v + delta, so Delta J_R = (m/2) E[int (2 v delta + delta^2) dt] >= 0 at
    the optimum.  Perturbing u probes the maximizing direction: paths are
    re-simulated under drift v + (u + delta) with the initial law rebuilt
    from the perturbed osmotic profile (the density that u + delta actually
    carries), and the integrand sees u + delta.  Both comparisons reuse the
    per-path noise streams (common random numbers), so a zero-amplitude
    perturbation gives exactly zero.

    The probe requires time-constant (stationary) field tables.
    """
    from .stationary import density_from_osmotic

    if config.direction != "forward":
        raise ValueError("saddle probes integrate forward ensembles")
    if fields.v.shape[0] > 1 and (np.ptp(fields.v, axis=0).max() > 0
                                  or np.ptp(fields.u, axis=0).max() > 0):
        raise ValueError("saddle probes require stationary (time-constant) fields")

    grid = fields.grid
    x_nodes = grid.points
    v0 = fields.v[0]
    u0 = fields.u[0]
    delta = perturbation.delta(x_nodes)
    horizon = float(fields.times[-1] - fields.times[0])

    if perturbation.target == "u":
        base_rho = density_from_osmotic(u0, grid, params)
        base_fields = make_stationary_fields(grid, v0, u0, base_rho, horizon,
                                             density_floor=fields.density_floor)
        pert_u = u0 + delta
        pert_rho = density_from_osmotic(pert_u, grid, params)
        pert_fields = make_stationary_fields(grid, v0, pert_u, pert_rho, horizon,
                                             density_floor=fields.density_floor)
    else:
        base_rho = fields.rho[0].copy()
        total = float(np.trapezoid(base_rho, dx=grid.dx))
        base_rho /= total
        base_fields = make_stationary_fields(grid, v0, u0, base_rho, horizon,
                                             density_floor=fields.density_floor)
        pert_fields = None  # same paths, perturbed integrand only

    m = params.mass
    n_paths = config.n_paths
    diffs = np.empty(n_paths)

    for lo in range(0, n_paths, _CHUNK_PATHS):
        hi = min(lo + _CHUNK_PATHS, n_paths)
        chunk_cfg = SdeConfig(dt_sde=config.dt_sde, n_paths=hi - lo, seed=config.seed,
                              direction="forward", boundary_policy=config.boundary_policy,
                              record_every=config.record_every)
        base_ens = sample_forward(base_fields, chunk_cfg, params,
                                  rho0=base_fields.rho[0], path_offset=lo)
        w = _quad_weights(base_ens.times, "trapezoid")
        x = base_ens.paths
        v_b = np.interp(x, x_nodes, v0)
        u_b = np.interp(x, x_nodes, u0)
        v_pot = np.asarray(potential.value(x), dtype=np.float64)
        lr_base = (0.5 * m) * (v_b * v_b - u_b * u_b) - v_pot
        jr_base = lr_base @ w + _terminal(spec.s_o, x[:, -1])

        if perturbation.target == "v":
            d_b = np.interp(x, x_nodes, delta)
            vp = v_b + d_b
            lr_pert = (0.5 * m) * (vp * vp - u_b * u_b) - v_pot
            jr_pert = lr_pert @ w + _terminal(spec.s_o, x[:, -1])
        else:
            pert_ens = sample_forward(pert_fields, chunk_cfg, params,
                                      rho0=pert_fields.rho[0], path_offset=lo)
            xp = pert_ens.paths
            v_p = np.interp(xp, x_nodes, v0)
            u_p = np.interp(xp, x_nodes, pert_fields.u[0])
            v_pot_p = np.asarray(potential.value(xp), dtype=np.float64)
            lr_pert = (0.5 * m) * (v_p * v_p - u_p * u_p) - v_pot_p
            jr_pert = lr_pert @ w + _terminal(spec.s_o, xp[:, -1])

        diffs[lo:hi] = jr_pert - jr_base

    mean = float(diffs.mean())
    se = float(diffs.std(ddof=1) / math.sqrt(n_paths))
    n_sigma = abs(mean) / se if se > 0 else math.inf
    return ProbeResult(delta_j_r=mean, stderr=se, n_sigma=float(n_sigma),
                       conclusive=bool(n_sigma >= 3.0 or se == 0.0),
                       target=perturbation.target,
                       amplitude=perturbation.amplitude, n_paths=n_paths)
