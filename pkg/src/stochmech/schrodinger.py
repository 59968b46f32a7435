"""Crank-Nicolson propagation on a uniform grid with hard-wall boundaries.

The Cayley form (1 + i dt H / 2hbar) psi' = (1 - i dt H / 2hbar) psi is
exactly norm-preserving in the discrete l2 sense, so the per-step norm check
is a solver diagnostic, not a tolerance knob.  The constant tridiagonal
left-hand side is LU-factored once and reused every step.
"""

import numpy as np
from scipy.linalg import lapack

from .errors import BoundaryLeakageError, StabilityGuardError, StochmechError
from .grid import GridSpec, PhysicalParams
from .potentials import Potential
from .wavefield import WaveField

EDGE_DENSITY_TOL = 1e-6
NORM_DRIFT_TOL = 1e-12


def gaussian_packet(grid: GridSpec, x0: float, sigma: float, k0: float = 0.0) -> np.ndarray:
    """Normalized Gaussian wavepacket with position spread sigma and wavenumber k0."""
    if not (sigma > 0):
        raise ValueError("sigma must be positive")
    x = grid.points
    psi = np.exp(-((x - x0) ** 2) / (4.0 * sigma**2) + 1j * k0 * x)
    norm = np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return psi / norm


def propagate_crank_nicolson(psi0: np.ndarray, grid: GridSpec, potential: Potential,
                             params: PhysicalParams, n_steps: int,
                             store_every: int = 1, t0: float = 0.0) -> WaveField:
    """Propagate psi0 through n_steps of size grid.dt_pde, storing strided slices.

    Raises StabilityGuardError when dt_pde exceeds dx^2 m / hbar (accuracy
    guard), BoundaryLeakageError when edge density passes EDGE_DENSITY_TOL,
    and StochmechError if the per-step norm drift exceeds NORM_DRIFT_TOL.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if store_every < 1 or n_steps % store_every != 0:
        raise ValueError("store_every must divide n_steps")
    dt = grid.dt_pde
    dx = grid.dx
    m, hbar = params.mass, params.hbar
    if dt > dx * dx * m / hbar:
        raise StabilityGuardError(
            f"stability guard: dt_pde={dt:.3e} exceeds dx^2 m/hbar={dx*dx*m/hbar:.3e}"
        )

    psi = np.asarray(psi0, dtype=np.complex128).copy()
    if psi.shape != (grid.n_points,):
        raise ValueError(f"psi0 shape {psi.shape} does not match grid ({grid.n_points},)")

    v_diag = np.asarray(potential.value(grid.points), dtype=np.float64)
    kin = hbar * hbar / (m * dx * dx)
    h_diag = kin + v_diag
    h_off = -0.5 * kin
    lam = 1j * dt / (2.0 * hbar)

    a_diag = 1.0 + lam * h_diag
    a_off = np.full(grid.n_points - 1, lam * h_off, dtype=np.complex128)
    dl, d, du, du2, ipiv, info = lapack.zgttrf(a_off.copy(), a_diag.astype(np.complex128),
                                               a_off.copy())
    if info != 0:
        raise StochmechError(f"tridiagonal factorization failed (info={info})")

    b_diag = 1.0 - lam * h_diag
    b_off = -lam * h_off

    def edge_check(p: np.ndarray, step: int) -> None:
        edge = max(abs(p[0]) ** 2, abs(p[-1]) ** 2)
        if edge > EDGE_DENSITY_TOL:
            raise BoundaryLeakageError(
                f"boundary leakage: edge density {edge:.3e} > {EDGE_DENSITY_TOL:.1e} "
                f"at step {step}; enlarge the grid"
            )

    edge_check(psi, 0)
    n_stored = n_steps // store_every + 1
    slices = np.empty((n_stored, grid.n_points), dtype=np.complex128)
    slices[0] = psi
    times = t0 + dt * np.arange(0, n_steps + 1, store_every, dtype=np.float64)

    norm_prev = np.sum(np.abs(psi) ** 2) * dx
    rhs = np.empty_like(psi)
    for step in range(1, n_steps + 1):
        np.multiply(b_diag, psi, out=rhs)
        rhs[1:] += b_off * psi[:-1]
        rhs[:-1] += b_off * psi[1:]
        psi, info = lapack.zgttrs(dl, d, du, du2, ipiv, rhs)
        if info != 0:
            raise StochmechError(f"tridiagonal solve failed (info={info}) at step {step}")
        norm = np.sum(np.abs(psi) ** 2) * dx
        if abs(norm - norm_prev) > NORM_DRIFT_TOL:
            raise StochmechError(
                f"norm drift {abs(norm - norm_prev):.3e} > {NORM_DRIFT_TOL:.1e} at step {step}"
            )
        norm_prev = norm
        edge_check(psi, step)
        if step % store_every == 0:
            slices[step // store_every] = psi

    return WaveField(grid=grid, times=times, psi=slices)
