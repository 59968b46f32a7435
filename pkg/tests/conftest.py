"""Shared fixtures: expensive objects solved once per session."""

import numpy as np
import pytest

from stochmech import (HarmonicPotential, PhysicalParams, SdeConfig, build_grid,
                       make_stationary_fields, sample_forward,
                       solve_stationary_ground)


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def ho_solution():
    """Harmonic ground state from the shooting solver, dx = 0.008."""
    grid = build_grid(-8.0, 8.0, 2001, 1e-3)
    return solve_stationary_ground(HarmonicPotential(omega=1.0), (0.2, 0.9), grid)


@pytest.fixture(scope="session")
def ou_ensemble(params):
    """Stationary harmonic-ground diffusion: an Ornstein-Uhlenbeck process.

    v = 0, u = -x gives dx = -x dt + dW, started from the exact stationary
    law N(0, 1/2).  512 paths over T = 150 recorded every 0.05.
    """
    grid = build_grid(-8.0, 8.0, 1601, 5e-3)
    x = grid.points
    rho = np.exp(-x * x) / np.sqrt(np.pi / 2.0) * np.sqrt(0.5)
    rho /= np.trapezoid(rho, dx=grid.dx)
    fields = make_stationary_fields(grid, np.zeros_like(x), -x, rho, 150.0)
    config = SdeConfig(dt_sde=5e-3, n_paths=512, seed=77001, record_every=10)
    return sample_forward(fields, config, params)
