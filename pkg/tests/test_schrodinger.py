import numpy as np
import pytest

from stochmech import (BoundaryLeakageError, CoherentStateSpec, FreePotential,
                       HarmonicPotential, PhysicalParams, StabilityGuardError,
                       build_grid, coherent_wavefunction, gaussian_packet,
                       propagate_crank_nicolson)


def _moments(rho, grid):
    norm = np.trapezoid(rho, dx=grid.dx)
    mean = np.trapezoid(grid.points * rho, dx=grid.dx) / norm
    var = np.trapezoid((grid.points - mean) ** 2 * rho, dx=grid.dx) / norm
    return norm, mean, var


def test_free_packet_dispersion_oracle():
    # closed form: <x>(t) = x0 + (hbar k0/m) t, var(t) = s0^2 (1 + (hbar t / 2 m s0^2)^2)
    params = PhysicalParams()
    grid = build_grid(-40.0, 40.0, 4001, 2e-4)
    psi0 = gaussian_packet(grid, x0=-5.0, sigma=1.0, k0=1.0)
    field = propagate_crank_nicolson(psi0, grid, FreePotential(), params,
                                     n_steps=20000, store_every=5000)
    for i, t in enumerate(field.times):
        norm, mean, var = _moments(np.abs(field.psi[i]) ** 2, grid)
        assert norm == pytest.approx(1.0, abs=1e-10)
        # the discrete Laplacian slows the packet by about (k dx)^2/6 per unit time
        assert mean == pytest.approx(-5.0 + t, abs=1e-4 * (1.0 + t))
        assert var == pytest.approx(1.0 + (0.5 * t) ** 2, rel=5e-4)


def test_harmonic_propagation_matches_closed_form():
    params = PhysicalParams()
    grid = build_grid(-10.0, 10.0, 2001, 1e-4)
    spec = CoherentStateSpec(omega=1.0, n_mean=1.0)
    psi0 = coherent_wavefunction(spec, grid, 0.0)
    field = propagate_crank_nicolson(psi0, grid, HarmonicPotential(omega=1.0),
                                     params, n_steps=5000, store_every=5000)
    exact = coherent_wavefunction(spec, grid, 0.5)
    assert np.max(np.abs(field.psi[-1] - exact)) < 1e-4


def test_norm_is_conserved():
    params = PhysicalParams()
    grid = build_grid(-20.0, 20.0, 1001, 1e-3)
    psi0 = gaussian_packet(grid, x0=0.0, sigma=1.5)
    field = propagate_crank_nicolson(psi0, grid, FreePotential(), params,
                                     n_steps=2000, store_every=500)
    norms = np.sum(np.abs(field.psi) ** 2, axis=1) * grid.dx
    assert np.max(np.abs(norms - norms[0])) < 1e-10


def test_stability_guard():
    params = PhysicalParams()
    grid = build_grid(-10.0, 10.0, 2001, 2e-4)  # dt above dx^2 m / hbar = 1e-4
    psi0 = gaussian_packet(grid, x0=0.0, sigma=1.0)
    with pytest.raises(StabilityGuardError):
        propagate_crank_nicolson(psi0, grid, FreePotential(), params, n_steps=10)


def test_boundary_leakage_guard():
    params = PhysicalParams()
    grid = build_grid(-8.0, 8.0, 801, 4e-4)
    psi0 = gaussian_packet(grid, x0=0.0, sigma=1.0, k0=5.0)
    with pytest.raises(BoundaryLeakageError, match="enlarge the grid"):
        propagate_crank_nicolson(psi0, grid, FreePotential(), params,
                                 n_steps=8000, store_every=8000)


def test_store_every_must_divide_step_count():
    params = PhysicalParams()
    grid = build_grid(-10.0, 10.0, 1001, 1e-4)
    psi0 = gaussian_packet(grid, x0=0.0, sigma=1.0)
    with pytest.raises(ValueError, match="store_every"):
        propagate_crank_nicolson(psi0, grid, FreePotential(), params,
                                 n_steps=10, store_every=3)


def test_packet_requires_positive_width():
    grid = build_grid(-10.0, 10.0, 1001, 1e-4)
    with pytest.raises(ValueError):
        gaussian_packet(grid, x0=0.0, sigma=0.0)
