import numpy as np
import pytest

from stochmech import (CoherentStateSpec, GridTruncationError, HarmonicPotential,
                       build_grid, classical_trajectory, coherent_velocity_fields,
                       coherent_wavefield, coherent_wavefunction, madelung_decompose)


def test_classical_trajectory_closed_form():
    spec = CoherentStateSpec(omega=1.0, n_mean=3.0)
    t = np.linspace(0.0, 7.0, 29)
    x_cl, p_cl = classical_trajectory(spec, t)
    amp = 2.0 * np.sqrt(3.0)
    assert np.allclose(x_cl, amp * spec.x_zpf * np.sin(t), atol=1e-14)
    assert np.allclose(p_cl, amp * spec.p_zpf * np.cos(t), atol=1e-14)
    # centre energy plus the zero-point term gives hbar omega (n + 1/2)
    energy = 0.5 * p_cl**2 + 0.5 * x_cl**2 + 0.5
    assert np.allclose(energy, 3.5, atol=1e-12)


def test_zero_point_scales():
    spec = CoherentStateSpec(omega=2.0, n_mean=0.0)
    assert spec.x_zpf == pytest.approx(0.5)
    assert spec.p_zpf == pytest.approx(1.0)
    assert spec.period == pytest.approx(np.pi)


def test_wavefunction_is_displaced_gaussian():
    spec = CoherentStateSpec(omega=1.0, n_mean=2.0)
    grid = build_grid(-10.0, 10.0, 2001, 0.01)
    x = grid.points
    for t in (0.0, 0.6, 2.9):
        psi = coherent_wavefunction(spec, grid, t)
        rho = np.abs(psi) ** 2
        x_cl, _ = classical_trajectory(spec, t)
        assert np.trapezoid(rho, dx=grid.dx) == pytest.approx(1.0, abs=1e-9)
        mean = np.trapezoid(x * rho, dx=grid.dx)
        var = np.trapezoid((x - mean) ** 2 * rho, dx=grid.dx)
        assert mean == pytest.approx(float(x_cl), abs=1e-9)
        assert var == pytest.approx(spec.x_zpf**2, abs=1e-9)


def test_wavefunction_satisfies_schrodinger_equation():
    # independent oracle: finite-difference residual of i hbar dpsi/dt = H psi
    spec = CoherentStateSpec(omega=1.0, n_mean=1.0)
    grid = build_grid(-9.0, 9.0, 3001, 0.01)
    pot = HarmonicPotential(omega=1.0)
    dt = 1e-5
    psi_m = coherent_wavefunction(spec, grid, 0.5 - dt)
    psi_0 = coherent_wavefunction(spec, grid, 0.5)
    psi_p = coherent_wavefunction(spec, grid, 0.5 + dt)
    dpsi_dt = (psi_p - psi_m) / (2.0 * dt)
    lap = (psi_0[2:] - 2.0 * psi_0[1:-1] + psi_0[:-2]) / grid.dx**2
    h_psi = -0.5 * lap + pot.value(grid.points[1:-1]) * psi_0[1:-1]
    residual = 1j * dpsi_dt[1:-1] - h_psi
    assert np.max(np.abs(residual)) / np.max(np.abs(psi_0)) < 1e-4


def test_velocity_fields_match_decomposition():
    spec = CoherentStateSpec(omega=1.0, n_mean=2.0)
    grid = build_grid(-10.0, 10.0, 2001, 0.01)
    t = 1.3
    fields = madelung_decompose(coherent_wavefield(spec, grid, [t, t + 0.01]),
                                spec.params)
    v_fn, u_fn = coherent_velocity_fields(spec, t)
    x_cl, _ = classical_trajectory(spec, t)
    x = grid.points
    near = np.abs(x - float(x_cl)) < 3.5
    assert np.max(np.abs(fields.v[0, near] - v_fn(x[near]))) < 1e-6
    assert np.max(np.abs(fields.u[0, near] - u_fn(x[near]))) < 1e-6


def test_truncated_grid_is_rejected():
    spec = CoherentStateSpec(omega=1.0, n_mean=3.0)
    grid = build_grid(-4.0, 4.0, 401, 0.01)
    with pytest.raises(GridTruncationError, match="widen the grid"):
        coherent_wavefunction(spec, grid, np.pi / 2.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        CoherentStateSpec(omega=0.0, n_mean=1.0)
    with pytest.raises(ValueError):
        CoherentStateSpec(omega=1.0, n_mean=-0.5)
