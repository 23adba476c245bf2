import numpy as np
import pytest

from nspb.elliptic import (
    SolverError,
    biot_savart,
    divergence,
    poisson_streamfunction,
    residual_helmholtz,
    solve_helmholtz_robin,
)
from nspb.grid import ChannelGrid, Field2D


@pytest.fixture()
def grid():
    return ChannelGrid(nx=24, ny=33)


def test_poisson_manufactured(grid):
    X, Y = grid.meshgrid()
    psi_exact = (1.0 - Y**2) * np.sin(X)
    omega = Field2D(grid, values=-(3.0 - Y**2) * np.sin(X))
    psi = poisson_streamfunction(omega)
    assert np.max(np.abs(psi.values - psi_exact)) < 1e-10
    assert np.max(np.abs(psi.values[0])) < 1e-13
    assert np.max(np.abs(psi.values[-1])) < 1e-13


def test_biot_savart_constant_vorticity(grid):
    _, Y = grid.meshgrid()
    omega = Field2D(grid, values=np.full((grid.ny, grid.nx), -2.0))
    u, v = biot_savart(omega)
    assert np.max(np.abs(u.values - 2.0 * Y)) < 1e-10
    assert np.max(np.abs(v.values)) < 1e-12
    assert np.max(np.abs(v.values[0])) < 1e-13
    assert np.max(np.abs(v.values[-1])) < 1e-13


def test_biot_savart_zero(grid):
    u, v = biot_savart(Field2D.zeros(grid))
    assert np.max(np.abs(u.values)) == 0.0
    assert np.max(np.abs(v.values)) == 0.0


def test_biot_savart_divergence_free(grid):
    rng = np.random.default_rng(3)
    omega = Field2D(grid, values=rng.standard_normal((grid.ny, grid.nx))).dealias()
    u, v = biot_savart(omega)
    assert divergence(u, v).inf_norm() < 1e-10


def test_helmholtz_robin_manufactured(grid):
    X, Y = grid.meshgrid()
    lam = 3.0
    u_exact = np.cos(X) * (Y**3 + Y)
    rhs = Field2D(grid, values=np.cos(X) * (4.0 * Y**3 - 2.0 * Y))
    x = grid.x
    u = solve_helmholtz_robin(
        grid,
        lam,
        rhs,
        robin_top=(2.0, 1.0, 8.0 * np.cos(x)),
        robin_bottom=(1.0, 3.0, 10.0 * np.cos(x)),
    )
    assert np.max(np.abs(u.values - u_exact)) < 1e-10
    assert residual_helmholtz(grid, lam, u, rhs) < 1e-10


def test_helmholtz_rejects_empty_boundary_row(grid):
    rhs = Field2D.zeros(grid)
    with pytest.raises(SolverError):
        solve_helmholtz_robin(grid, 1.0, rhs, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))


def _dirichlet_error(ny: int) -> float:
    grid = ChannelGrid(nx=8, ny=ny)
    X, Y = grid.meshgrid()
    lam = 2.0
    # harmonic-in-y factor: Laplacian of sin(x) e^{3y} is (9 - 1) u
    u_exact = np.sin(X) * np.exp(3.0 * Y)
    rhs = Field2D(grid, values=(lam - 8.0) * u_exact)
    u = solve_helmholtz_robin(
        grid,
        lam,
        rhs,
        robin_top=(1.0, 0.0, np.e**3 * np.sin(grid.x)),
        robin_bottom=(1.0, 0.0, np.e**-3 * np.sin(grid.x)),
    )
    return float(np.max(np.abs(u.values - u_exact)))


def test_spectral_accuracy_doubling():
    e1 = _dirichlet_error(11)
    e2 = _dirichlet_error(21)
    assert e2 <= max(1e-3 * e1, 1e-12)
    e3 = _dirichlet_error(41)
    assert e3 < 1e-12


def test_poisson_spectral_residual_random(grid):
    rng = np.random.default_rng(4)
    omega = Field2D(grid, values=rng.standard_normal((grid.ny, grid.nx))).dealias()
    psi = poisson_streamfunction(omega)
    lap = psi.ddx().ddx() + psi.ddy().ddy()
    res = lap.spectral - omega.spectral
    assert np.max(np.abs(res[:-2, :])) < 1e-10
