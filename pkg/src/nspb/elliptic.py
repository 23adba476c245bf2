"""Per-mode Chebyshev tau solvers and the vorticity inversion.

Streamfunction convention: omega = Laplacian(psi), u = -d(psi)/dy,
v = +d(psi)/dx, so each Fourier mode solves (k^2 - d^2/dy^2) psi = -omega
with psi(+-1) = 0 (impermeable walls; the k=0 data fixes the zero-net-flux
gauge).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg

from .grid import ChannelGrid, Field2D, cheb_derivative_coeffs


class SolverError(RuntimeError):
    """Singular or ill-posed boundary-value solve."""


@lru_cache(maxsize=None)
def _diff_matrices(ny: int) -> tuple[np.ndarray, np.ndarray]:
    D = np.zeros((ny, ny))
    e = np.zeros(ny)
    for k in range(ny):
        e[:] = 0.0
        e[k] = 1.0
        D[:, k] = cheb_derivative_coeffs(e)
    return D, D @ D


def _bc_row(ny: int, wall: str, a: float, b: float) -> np.ndarray:
    """Tau row for a*u + b*u' at the wall; wall in {'top', 'bottom'}."""
    m = np.arange(ny)
    if wall == "top":
        return a * np.ones(ny) + b * m.astype(float) ** 2
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    return a * sign + b * (-sign) * m.astype(float) ** 2


class TauSolver:
    """LU-factorized (lam + k^2 - d^2/dy^2) systems, one per rfft mode.

    The last two coefficient equations are replaced by boundary rows
    a*u + b*u' = c at the top and bottom wall.
    """

    def __init__(
        self,
        grid: ChannelGrid,
        lam: float,
        bc_top: tuple[float, float],
        bc_bottom: tuple[float, float],
    ):
        if bc_top == (0.0, 0.0) or bc_bottom == (0.0, 0.0):
            raise SolverError("boundary rows need (a, b) != (0, 0)")
        self.grid = grid
        self.lam = float(lam)
        self.bc_top = bc_top
        self.bc_bottom = bc_bottom
        ny = grid.ny
        _, D2 = _diff_matrices(ny)
        row_t = _bc_row(ny, "top", *bc_top)
        row_b = _bc_row(ny, "bottom", *bc_bottom)
        self._lu = []
        for k in grid.kx:
            A = (self.lam + k * k) * np.eye(ny) - D2
            A[ny - 2, :] = row_t
            A[ny - 1, :] = row_b
            try:
                self._lu.append(scipy.linalg.lu_factor(A))
            except scipy.linalg.LinAlgError as exc:  # pragma: no cover
                raise SolverError(f"singular tau system at k={k}") from exc

    def solve_mode(self, j: int, rhs_coeffs: np.ndarray, c_top=0.0, c_bottom=0.0) -> np.ndarray:
        b = np.array(rhs_coeffs, dtype=complex)
        b[-2] = c_top
        b[-1] = c_bottom
        lu = self._lu[j]
        x = scipy.linalg.lu_solve(lu, b.real) + 1j * scipy.linalg.lu_solve(lu, b.imag)
        return x

    def solve(self, rhs_spectral: np.ndarray, c_top=None, c_bottom=None) -> np.ndarray:
        """Solve every mode; c_top/c_bottom are per-mode data (default 0)."""
        ny, nk = rhs_spectral.shape
        out = np.empty((ny, nk), dtype=complex)
        zt = np.zeros(nk, dtype=complex) if c_top is None else np.asarray(c_top, dtype=complex)
        zb = np.zeros(nk, dtype=complex) if c_bottom is None else np.asarray(c_bottom, dtype=complex)
        for j in range(nk):
            out[:, j] = self.solve_mode(j, rhs_spectral[:, j], zt[j], zb[j])
        return out


def solve_helmholtz_robin(
    grid: ChannelGrid,
    lam: float,
    rhs: Field2D,
    robin_top: tuple[float, float, float | np.ndarray],
    robin_bottom: tuple[float, float, float | np.ndarray],
) -> Field2D:
    """Solve (lam - Laplacian) u = rhs with a*u + b*u' = c on each wall.

    c may be a scalar or an x-profile of length nx.
    """
    at, bt, ct = robin_top
    ab, bb, cb = robin_bottom
    solver = TauSolver(grid, lam, (at, bt), (ab, bb))

    def mode_data(c):
        prof = np.broadcast_to(np.asarray(c, dtype=float), (grid.nx,))
        return np.fft.rfft(prof) / grid.nx

    u = solver.solve(rhs.spectral, mode_data(ct), mode_data(cb))
    return Field2D(grid, spectral=u)


@lru_cache(maxsize=8)
def _poisson_cache(grid: ChannelGrid) -> TauSolver:
    return TauSolver(grid, 0.0, (1.0, 0.0), (1.0, 0.0))


def poisson_streamfunction(omega: Field2D) -> Field2D:
    """psi with Laplacian(psi) = omega and psi = 0 on both walls."""
    solver = _poisson_cache(omega.grid)
    return Field2D(omega.grid, spectral=solver.solve(-omega.spectral))


def biot_savart(omega: Field2D) -> tuple[Field2D, Field2D]:
    """Velocity (u, v) induced by vorticity under the channel gauge."""
    psi = poisson_streamfunction(omega)
    u = Field2D(omega.grid, spectral=-cheb_derivative_coeffs(psi.spectral))
    v = psi.ddx()
    return u, v


def divergence(u: Field2D, v: Field2D) -> Field2D:
    return u.ddx() + v.ddy()


def residual_helmholtz(
    grid: ChannelGrid, lam: float, u: Field2D, rhs: Field2D
) -> float:
    """Max-norm interior residual of (lam - Laplacian) u - rhs."""
    lap = u.ddx().ddx().spectral + cheb_derivative_coeffs(cheb_derivative_coeffs(u.spectral))
    res = lam * u.spectral - lap - rhs.spectral
    # the last two tau rows hold boundary data, not the PDE
    return float(np.max(np.abs(res[:-2, :])))
