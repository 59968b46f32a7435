import numpy as np
import pytest

from stochmech import PhysicalParams, build_grid


def test_spacing_and_endpoints():
    grid = build_grid(-2.0, 2.0, 17, 0.01)
    assert grid.dx == pytest.approx(0.25)
    pts = grid.points
    assert pts.shape == (17,)
    assert pts[0] == -2.0 and pts[-1] == 2.0
    assert np.allclose(np.diff(pts), grid.dx, atol=1e-15)


def test_bounds_validation():
    with pytest.raises(ValueError):
        build_grid(2.0, -2.0, 17, 0.01)
    with pytest.raises(ValueError):
        build_grid(0.0, 0.0, 17, 0.01)
    with pytest.raises(ValueError):
        build_grid(-2.0, float("inf"), 17, 0.01)


def test_minimum_resolution():
    with pytest.raises(ValueError, match="n_points"):
        build_grid(-2.0, 2.0, 15, 0.01)


def test_dt_pde_must_be_positive():
    with pytest.raises(ValueError):
        build_grid(-2.0, 2.0, 17, 0.0)


def test_diffusion_rate():
    assert PhysicalParams().diffusion == 1.0
    assert PhysicalParams(mass=2.0, hbar=0.5).diffusion == pytest.approx(0.25)


def test_params_validation():
    with pytest.raises(ValueError):
        PhysicalParams(mass=0.0)
    with pytest.raises(ValueError):
        PhysicalParams(hbar=-1.0)
