"""Polar decomposition of wavefields into density, phase and the two drifts.

rho = |psi|^2, S = hbar * unwrapped phase, v = dS/dx / m, and
u = (hbar/2m) d(ln rho)/dx.  Phase is only meaningful where the density is
well above the floor; outside the trusted region the drifts are pinned to
zero and the columns are flagged rather than extrapolated.
"""

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, PhysicalParams
from .potentials import Potential
from .wavefield import WaveField

DEFAULT_FLOOR_FRACTION = 1e-12
RESIDUAL_MASK_FACTOR = 10.0


@dataclass(frozen=True)
class MadelungFields:
    """Gridded density, phase and drift fields for a set of time slices.

    All field arrays have shape (n_times, n_points).  low_density marks
    points with rho < RESIDUAL_MASK_FACTOR * density_floor, where the
    derivative formulas for v and u are not trustworthy.  node_flags marks
    slices whose above-floor support is not a single interval, i.e. the
    density pinches below the floor in the grid interior.
    """

    grid: GridSpec
    times: np.ndarray
    rho: np.ndarray
    S: np.ndarray
    v: np.ndarray
    u: np.ndarray
    density_floor: float
    low_density: np.ndarray
    node_flags: np.ndarray

    @property
    def n_times(self) -> int:
        return self.times.size

    def nearest_time_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))


def _unwrap_from_anchor(theta: np.ndarray, anchor: int) -> np.ndarray:
    """Unwrap phases along x outward from the anchor column.

    The anchor keeps its principal value; columns to either side are made
    continuous walking away from it, so noise at near-zero density edges
    cannot corrupt the phase in the bulk.
    """
    out = np.empty_like(theta)
    out[anchor] = theta[anchor]
    if anchor + 1 < theta.size:
        right = np.unwrap(theta[anchor:])
        out[anchor:] = right - right[0] + theta[anchor]
    if anchor > 0:
        left = np.unwrap(theta[anchor::-1])
        out[anchor::-1] = left - left[0] + theta[anchor]
    return out


def _central_diff(field: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Second-order first derivative with one-sided second-order ends."""
    return np.gradient(field, spacing, axis=axis, edge_order=2)


def madelung_decompose(field: WaveField, params: PhysicalParams,
                       density_floor: float | None = None) -> MadelungFields:
    """Split a WaveField into (rho, S, v, u) tables with trust bookkeeping.

    density_floor defaults to DEFAULT_FLOOR_FRACTION times the global density
    maximum.  The phase is unwrapped spatially outward from each slice's
    density maximum and anchored in time so S is continuous across slices
    (each slice may be shifted by a multiple of 2 pi hbar).
    """
    psi = field.psi
    grid = field.grid
    hbar, m = params.hbar, params.mass
    rho = np.abs(psi) ** 2
    if density_floor is None:
        density_floor = DEFAULT_FLOOR_FRACTION * float(rho.max())
    if not (density_floor > 0):
        raise ValueError("density_floor must be positive")
    above_floor = rho > density_floor

    n_t, n_x = psi.shape
    theta = np.empty((n_t, n_x), dtype=np.float64)
    node_flags = np.zeros(n_t, dtype=bool)
    prev_theta = None
    for i in range(n_t):
        anchor = int(np.argmax(rho[i]))
        th = _unwrap_from_anchor(np.angle(psi[i]), anchor)
        if prev_theta is not None:
            # keep S continuous in t: shift by the 2 pi multiple that best
            # matches the previous slice at this slice's anchor column
            k = np.round((prev_theta[anchor] - th[anchor]) / (2.0 * np.pi))
            th = th + 2.0 * np.pi * k
        # hold the phase constant outside the above-floor support so finite
        # differences at the fringe see no fake gradients
        cols = np.flatnonzero(above_floor[i])
        if cols.size == 0:
            raise ValueError(f"slice {i} has no density above the floor")
        lo, hi = cols[0], cols[-1]
        th[:lo] = th[lo]
        th[hi + 1:] = th[hi]
        node_flags[i] = cols.size != hi - lo + 1
        theta[i] = th
        prev_theta = th

    S = hbar * theta
    log_rho = np.log(np.maximum(rho, density_floor))
    v = _central_diff(S, grid.dx, axis=1) / m
    u = (hbar / (2.0 * m)) * _central_diff(log_rho, grid.dx, axis=1)
    # below the floor both derivative formulas degenerate to clamped noise
    v[~above_floor] = 0.0
    u[~above_floor] = 0.0
    low_density = rho < RESIDUAL_MASK_FACTOR * density_floor

    return MadelungFields(grid=grid, times=field.times.copy(), rho=rho, S=S,
                          v=v, u=u, density_floor=float(density_floor),
                          low_density=low_density, node_flags=node_flags)


def make_stationary_fields(grid: GridSpec, v_profile: np.ndarray, u_profile: np.ndarray,
                           rho_profile: np.ndarray, horizon: float,
                           density_floor: float | None = None) -> MadelungFields:
    """Constant-in-time field tables spanning [0, horizon].

    Two identical slices are stored; time interpolation between equal rows is
    the identity, so samplers see truly static drifts.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rho = np.asarray(rho_profile, dtype=np.float64)
    if density_floor is None:
        density_floor = DEFAULT_FLOOR_FRACTION * float(rho.max())

    def stack(row):
        return np.vstack([np.asarray(row, dtype=np.float64)] * 2)

    return MadelungFields(grid=grid, times=np.array([0.0, float(horizon)]),
                          rho=stack(rho), S=np.zeros((2, grid.n_points)),
                          v=stack(v_profile), u=stack(u_profile),
                          density_floor=float(density_floor),
                          low_density=stack(rho)
                          < RESIDUAL_MASK_FACTOR * float(density_floor),
                          node_flags=np.zeros(2, dtype=bool))


def madelung_residuals(fields: MadelungFields, potential: Potential,
                       params: PhysicalParams) -> dict:
    """Continuity and phase-evolution residuals on interior time slices.

    continuity: d(rho)/dt + d(rho v)/dx
    phase:      dS/dt + (dS/dx)^2 / 2m + V - (hbar^2/2m) (d^2 sqrt(rho)/dx^2)/sqrt(rho)

    Time derivatives need at least 3 stored slices.  Residuals are only
    counted where rho exceeds RESIDUAL_MASK_FACTOR * density_floor on the
    full space-time stencil.  Returns sup and RMS norms for both residuals.
    """
    if fields.n_times < 3:
        raise ValueError("need at least 3 time slices for time derivatives")
    dts = np.diff(fields.times)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
        raise ValueError("time slices must be uniformly spaced")
    dt = float(dts[0])
    dx = fields.grid.dx
    m, hbar = params.mass, params.hbar

    rho, S, v = fields.rho, fields.S, fields.v
    sqrt_rho = np.sqrt(rho)
    v_pot = np.asarray(potential.value(fields.grid.points), dtype=np.float64)

    drho_dt = _central_diff(rho, dt, axis=0)
    dflux_dx = _central_diff(rho * v, dx, axis=1)
    cont = drho_dt + dflux_dx

    dS_dt = _central_diff(S, dt, axis=0)
    dS_dx = _central_diff(S, dx, axis=1)
    lap_sqrt = np.empty_like(sqrt_rho)
    lap_sqrt[:, 1:-1] = (sqrt_rho[:, 2:] - 2.0 * sqrt_rho[:, 1:-1] + sqrt_rho[:, :-2]) / (dx * dx)
    lap_sqrt[:, 0] = lap_sqrt[:, 1]
    lap_sqrt[:, -1] = lap_sqrt[:, -2]
    quantum = -(hbar * hbar / (2.0 * m)) * lap_sqrt / np.maximum(sqrt_rho, np.sqrt(fields.density_floor))
    phase = dS_dt + dS_dx**2 / (2.0 * m) + v_pot[None, :] + quantum

    # count only points whose full 3x3 space-time stencil stays well above
    # the floor, excluding boundary rows/columns where the stencils degrade
    core = ~fields.low_density
    mask = core.copy()
    mask[:, 1:] &= core[:, :-1]
    mask[:, :-1] &= core[:, 1:]
    mask[1:, :] &= core[:-1, :]
    mask[:-1, :] &= core[1:, :]
    mask[0, :] = False
    mask[-1, :] = False
    mask[:, 0] = False
    mask[:, -1] = False
    if not mask.any():
        raise ValueError("no residual points survive the density mask")

    def norms(res):
        vals = res[mask]
        return float(np.max(np.abs(vals))), float(np.sqrt(np.mean(vals**2)))

    cont_sup, cont_l2 = norms(cont)
    phase_sup, phase_l2 = norms(phase)
    return {
        "continuity_sup": cont_sup,
        "continuity_l2": cont_l2,
        "phase_sup": phase_sup,
        "phase_l2": phase_l2,
        "n_points_checked": int(mask.sum()),
    }
