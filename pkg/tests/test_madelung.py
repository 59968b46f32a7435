import numpy as np
import pytest

from stochmech import (CoherentStateSpec, HarmonicPotential, PhysicalParams,
                       WaveField, build_grid, coherent_wavefield, gaussian_packet,
                       interpolate_velocity, madelung_decompose,
                       madelung_residuals, make_stationary_fields)


def test_gaussian_with_plane_wave_phase(params):
    # psi = g(x) e^(ikx): v = hbar k / m everywhere trusted, u = -(x - x0)/(2 sigma^2)
    grid = build_grid(-12.0, 12.0, 2401, 0.01)
    sigma, x0, k0 = 1.2, 0.5, 2.0
    psi = gaussian_packet(grid, x0=x0, sigma=sigma, k0=k0)
    field = WaveField(grid=grid, times=np.array([0.0]), psi=psi[None, :])
    fields = madelung_decompose(field, params)
    trusted = ~fields.low_density[0]
    x = grid.points[trusted]
    assert np.max(np.abs(fields.v[0, trusted] - k0)) < 1e-8
    assert np.max(np.abs(fields.u[0, trusted] + 0.5 * (x - x0) / sigma**2)) < 1e-8
    assert not fields.node_flags.any()
    # drifts are pinned to zero where the density is below the floor
    below = fields.rho[0] <= fields.density_floor
    assert below.any()
    assert np.all(fields.v[0, below] == 0.0)
    assert np.all(fields.u[0, below] == 0.0)


def test_ho_ground_osmotic_profile(params):
    grid = build_grid(-10.0, 10.0, 2001, 0.01)
    spec = CoherentStateSpec(omega=1.0, n_mean=0.0)
    fields = madelung_decompose(coherent_wavefield(spec, grid, [0.0, 0.5]), params)
    trusted = ~fields.low_density[0]
    x = grid.points
    assert np.max(np.abs(fields.u[0, trusted] + x[trusted])) < 1e-4
    assert np.max(np.abs(fields.v[0, trusted])) < 1e-4


def test_node_is_flagged_on_first_excited_state(params):
    grid = build_grid(-10.0, 10.0, 2001, 0.01)
    x = grid.points
    psi = x * np.exp(-0.5 * x * x)
    psi = psi / np.sqrt(np.trapezoid(np.abs(psi) ** 2, dx=grid.dx))
    field = WaveField(grid=grid, times=np.array([0.0]),
                      psi=psi[None, :].astype(np.complex128))
    fields = madelung_decompose(field, params)
    assert fields.node_flags[0]


def test_stationary_tables_are_time_constant(params):
    grid = build_grid(-5.0, 5.0, 201, 0.01)
    x = grid.points
    rho = np.exp(-x * x)
    rho /= np.trapezoid(rho, dx=grid.dx)
    fields = make_stationary_fields(grid, 0.3 * x, -x, rho, horizon=2.0)
    assert fields.times[0] == 0.0 and fields.times[-1] == 2.0
    v, u = interpolate_velocity(fields, np.array([0.7, -1.1]), t=0.37)
    assert np.allclose(v, 0.3 * np.array([0.7, -1.1]), atol=1e-12)
    assert np.allclose(u, -np.array([0.7, -1.1]), atol=1e-12)


def test_residuals_vanish_on_exact_solution_at_second_order(params):
    # analytic coherent tables must show the stencils' own O(dx^2, dt^2) residual
    spec = CoherentStateSpec(omega=1.0, n_mean=1.0)
    pot = HarmonicPotential(omega=1.0)

    def residuals(n_points, dt):
        grid = build_grid(-10.0, 10.0, n_points, dt)
        times = dt * np.arange(int(round(1.0 / dt)) + 1)
        fields = madelung_decompose(coherent_wavefield(spec, grid, times), params)
        return madelung_residuals(fields, pot, params)

    coarse = residuals(501, 0.02)
    fine = residuals(1001, 0.01)
    for key in ("continuity_sup", "phase_sup", "continuity_l2", "phase_l2"):
        assert coarse[key] / fine[key] >= 3.5, key


def test_residuals_need_three_slices(params):
    grid = build_grid(-5.0, 5.0, 201, 0.01)
    x = grid.points
    rho = np.exp(-x * x)
    rho /= np.trapezoid(rho, dx=grid.dx)
    fields = make_stationary_fields(grid, np.zeros_like(x), -x, rho, horizon=1.0)
    with pytest.raises(ValueError, match="3 time slices"):
        madelung_residuals(fields, HarmonicPotential(omega=1.0), params)
