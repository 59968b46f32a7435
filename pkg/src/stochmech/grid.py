"""Uniform 1D spatial grids and the physical constants shared by all solvers."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform spatial grid with the time step used for stored field slices.

    dx is always (x_max - x_min) / (n_points - 1); use build_grid rather than
    constructing directly so the consistency checks run.
    """

    x_min: float
    x_max: float
    n_points: int
    dx: float
    dt_pde: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError("inverted bounds: x_max must exceed x_min")
        if self.n_points < 16:
            raise ValueError(f"n_points must be >= 16, got {self.n_points}")
        if not (self.dt_pde > 0):
            raise ValueError("dt_pde must be positive")
        expected = (self.x_max - self.x_min) / (self.n_points - 1)
        if abs(self.dx - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError("dx inconsistent with bounds and n_points")

    @property
    def points(self) -> np.ndarray:
        """Grid node coordinates, shape (n_points,)."""
        return np.linspace(self.x_min, self.x_max, self.n_points)


def build_grid(x_min: float, x_max: float, n_points: int, dt_pde: float) -> GridSpec:
    """Validate and construct a GridSpec with dx computed from the bounds."""
    if not (np.isfinite(x_min) and np.isfinite(x_max)):
        raise ValueError("grid bounds must be finite")
    if x_max <= x_min:
        raise ValueError("inverted bounds: x_max must exceed x_min")
    if n_points < 16:
        raise ValueError(f"n_points must be >= 16, got {n_points}")
    dx = (x_max - x_min) / (n_points - 1)
    return GridSpec(x_min=float(x_min), x_max=float(x_max), n_points=int(n_points),
                    dx=dx, dt_pde=float(dt_pde))


@dataclass(frozen=True)
class PhysicalParams:
    """Particle mass and the quantum of action; both strictly positive.

    The Wiener term of every diffusion in this package has variance rate
    hbar / mass.
    """

    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError("mass must be positive and finite")
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError("hbar must be positive and finite")

    @property
    def diffusion(self) -> float:
        """Variance rate hbar/m of the Wiener term."""
        return self.hbar / self.mass
