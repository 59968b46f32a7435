"""Oscillating Gaussian states of the harmonic well and their drift fields.

The state with mean occupation n has centre following the classical orbit of
amplitude 2 sqrt(n) x_zpf and a rigid Gaussian profile of variance x_zpf^2.
Conventions: the centre starts at x = 0 moving in +x, so
x_cl(t) = 2 sqrt(n) x_zpf sin(omega t) and p_cl(t) = 2 sqrt(n) p_zpf cos(omega t).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTruncationError
from .grid import GridSpec, PhysicalParams
from .wavefield import WaveField

BOUNDARY_AMPLITUDE_TOL = 1e-8


@dataclass(frozen=True)
class CoherentStateSpec:
    """Harmonic-well Gaussian state with mean occupation n_mean.

    x_zpf and p_zpf are the ground-state position and momentum spreads,
    derived from omega and the physical params at construction.
    """

    omega: float
    n_mean: float
    params: PhysicalParams = PhysicalParams()
    x_zpf: float = field(init=False)
    p_zpf: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.omega > 0 and np.isfinite(self.omega)):
            raise ValueError("omega must be positive and finite")
        if not (self.n_mean >= 0 and np.isfinite(self.n_mean)):
            raise ValueError("n_mean must be non-negative and finite")
        m, hbar = self.params.mass, self.params.hbar
        object.__setattr__(self, "x_zpf", math.sqrt(hbar / (2.0 * m * self.omega)))
        object.__setattr__(self, "p_zpf", math.sqrt(hbar * m * self.omega / 2.0))

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


def classical_trajectory(spec: CoherentStateSpec, times):
    """Centre position and momentum (x_cl, p_cl) at the given times."""
    t = np.asarray(times, dtype=np.float64)
    amp = 2.0 * math.sqrt(spec.n_mean)
    x_cl = amp * spec.x_zpf * np.sin(spec.omega * t)
    p_cl = amp * spec.p_zpf * np.cos(spec.omega * t)
    return x_cl, p_cl


def coherent_wavefunction(spec: CoherentStateSpec, grid: GridSpec, t: float) -> np.ndarray:
    """Exact wavefunction slice at time t on the grid nodes.

    Raises GridTruncationError when the amplitude at either boundary exceeds
    BOUNDARY_AMPLITUDE_TOL, meaning the grid clips the state.
    """
    m, hbar, w = spec.params.mass, spec.params.hbar, spec.omega
    # centre starts at x=0 with +x momentum: alpha(0) = i sqrt(n)
    alpha = 1j * math.sqrt(spec.n_mean) * np.exp(-1j * w * t)
    x = grid.points
    exponent = (
        -(m * w / (2.0 * hbar)) * x**2
        + math.sqrt(2.0 * m * w / hbar) * alpha * x
        - alpha**2 / 2.0
        - spec.n_mean / 2.0
        - 1j * w * t / 2.0
    )
    psi = (m * w / (math.pi * hbar)) ** 0.25 * np.exp(exponent)
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge >= BOUNDARY_AMPLITUDE_TOL:
        raise GridTruncationError(
            f"grid truncation: boundary amplitude {edge:.3e} >= "
            f"{BOUNDARY_AMPLITUDE_TOL:.1e}; widen the grid"
        )
    return psi


def coherent_wavefield(spec: CoherentStateSpec, grid: GridSpec, times) -> WaveField:
    """Stack exact slices at the given times into a WaveField."""
    times = np.asarray(times, dtype=np.float64)
    psi = np.empty((times.size, grid.n_points), dtype=np.complex128)
    for i, t in enumerate(times):
        psi[i] = coherent_wavefunction(spec, grid, float(t))
    return WaveField(grid=grid, times=times, psi=psi)


def coherent_velocity_fields(spec: CoherentStateSpec, t: float):
    """Closed-form drift fields at time t as callables (v, u) of x.

    v(x) = p_cl(t)/m is flat in x; u(x) = -omega (x - x_cl(t)) vanishes at the
    moving centre.  Both accept scalars or arrays.
    """
    m = spec.params.mass
    w = spec.omega
    x_cl, p_cl = classical_trajectory(spec, float(t))

    def current_velocity(x):
        x = np.asarray(x, dtype=np.float64)
        return p_cl / m + 0.0 * x

    def osmotic_velocity(x):
        x = np.asarray(x, dtype=np.float64)
        return -w * (x - x_cl)

    return current_velocity, osmotic_velocity
