"""Finite-volume Fokker-Planck solver on the truncated half plane.

The configuration density f(m_t, m_n, t) of the grafted dumbbell obeys

    df/dt = div( D grad f + D f grad U - a f ),    a = (u_slip/R) m_n e_t

with a no-flux wall at m_n = 0 and no-flux truncation where U is large.
Edge fluxes use exponential fitting (Scharfetter-Gummel weights driven by
potential differences plus the shear Peclet number), which is positivity
preserving under the explicit stability bound and makes the discrete
steady state at u_slip = 0 exactly the Gibbs cell density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .micro import SpringPotential, StressMoments
from .params import PhysicalParams


class FPError(RuntimeError):
    """Stability violation or invalid Fokker-Planck configuration."""


@dataclass(frozen=True)
class FPGrid:
    """Uniform cells on [-extent_t, extent_t] x [0, extent_n]."""

    extent_t: float
    extent_n: float
    n_t: int
    n_n: int

    def __post_init__(self):
        if self.extent_t <= 0 or self.extent_n <= 0:
            raise FPError("extents must be positive")
        if self.n_t < 4 or self.n_n < 4:
            raise FPError("need at least 4 cells per direction")

    @classmethod
    def for_potential(
        cls, potential: SpringPotential, cutoff: float = 30.0, h: float = 0.12
    ) -> "FPGrid":
        """Box sized so the neglected tail has U >= cutoff."""
        if potential.finite_extent:
            r = potential.R * math.sqrt(max(1.0 - math.exp(-cutoff / max(potential.H, 1e-12)), 0.5))
        else:
            r = potential.R * (cutoff / max(potential.H, 1e-12)) ** (
                1.0 / (2 * potential.k_exponent)
            )
        return cls(
            extent_t=r,
            extent_n=r,
            n_t=max(4, int(math.ceil(2.0 * r / h))),
            n_n=max(4, int(math.ceil(r / h))),
        )

    @property
    def h_t(self) -> float:
        return 2.0 * self.extent_t / self.n_t

    @property
    def h_n(self) -> float:
        return self.extent_n / self.n_n

    @property
    def cell_area(self) -> float:
        return self.h_t * self.h_n

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        xc = -self.extent_t + self.h_t * (np.arange(self.n_t) + 0.5)
        yc = self.h_n * (np.arange(self.n_n) + 0.5)
        return xc, yc

    def center_points(self) -> np.ndarray:
        xc, yc = self.centers()
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        return np.stack([X, Y], axis=-1)


def _bernoulli(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, -500.0, 500.0)
    small = np.abs(x) < 1e-8
    with np.errstate(over="ignore"):
        out = np.where(small, 1.0 - 0.5 * x, x / np.expm1(np.where(small, 1.0, x)))
    return out


def gibbs_density(fpgrid: FPGrid, potential: SpringPotential, mass: float = 1.0) -> np.ndarray:
    """Cell-center Gibbs density normalized to the given mass."""
    w = np.exp(-potential.energy(fpgrid.center_points()))
    return w * (mass / (w.sum() * fpgrid.cell_area))


def density_mass(fpgrid: FPGrid, density: np.ndarray) -> float:
    return float(density.sum() * fpgrid.cell_area)


@dataclass
class FPResult:
    grid: FPGrid
    density: np.ndarray
    t: float
    mass_initial: float
    mass_final: float
    times: list
    moment_history: list


def fp_moments(
    fpgrid: FPGrid,
    density: np.ndarray,
    potential: SpringPotential,
    phys: PhysicalParams,
) -> StressMoments:
    """Kramers moments of a density whose mass plays the role of N_P."""
    pts = fpgrid.center_points()
    g = potential.grad(pts)
    pref = phys.kB_T / phys.rho * fpgrid.cell_area
    tn = pref * float(np.sum(pts[..., 0] * g[..., 1] * density))
    nn = pref * float(np.sum(pts[..., 1] * g[..., 1] * density))
    return StressMoments(sigma_tn=tn, sigma_nn=nn)


def wall_tangential_flux_moment(
    fpgrid: FPGrid, density: np.ndarray, phys: PhysicalParams
) -> float:
    """D * integral of m_t f(m_t, 0) dm_t, estimated from the wall row.

    This is the boundary term the closed tangential moment equation omits;
    exposed as a diagnostic of the closure defect.
    """
    xc, _ = fpgrid.centers()
    D = phys.kB_T / phys.zeta
    return D * float(np.sum(xc * density[:, 0]) * fpgrid.h_t)


def stable_dt(
    fpgrid: FPGrid,
    potential: SpringPotential,
    phys: PhysicalParams,
    u_max: float = 0.0,
    safety: float = 0.45,
) -> float:
    """Largest positivity-preserving explicit step (with a safety margin)."""
    rate = _outflow_rates(fpgrid, potential, phys, abs(u_max))
    rate = np.maximum(rate, _outflow_rates(fpgrid, potential, phys, -abs(u_max)))
    return safety / float(rate.max())


def _edge_exponents(fpgrid, potential, phys, u_slip):
    U = potential.energy(fpgrid.center_points())
    _, yc = fpgrid.centers()
    D = phys.kB_T / phys.zeta
    s_x = (u_slip / potential.R) * yc[None, :] * fpgrid.h_t / D - (U[1:, :] - U[:-1, :])
    s_y = -(U[:, 1:] - U[:, :-1])
    return s_x, s_y


def _outflow_rates(fpgrid, potential, phys, u_slip):
    s_x, s_y = _edge_exponents(fpgrid, potential, phys, u_slip)
    D = phys.kB_T / phys.zeta
    rx = D / fpgrid.h_t**2
    ry = D / fpgrid.h_n**2
    rate = np.zeros((fpgrid.n_t, fpgrid.n_n))
    rate[:-1, :] += rx * _bernoulli(-s_x)
    rate[1:, :] += rx * _bernoulli(s_x)
    rate[:, :-1] += ry * _bernoulli(-s_y)
    rate[:, 1:] += ry * _bernoulli(s_y)
    return rate


def fokker_planck_solve(
    fpgrid: FPGrid,
    potential: SpringPotential,
    phys: PhysicalParams,
    t_end: float,
    u_slip=0.0,
    dt: float | None = None,
    f0: np.ndarray | None = None,
    record_times=(),
) -> FPResult:
    """Explicit finite-volume integration to t_end.

    ``u_slip`` may be a constant or a callable of time.  ``record_times``
    asks for Kramers moment snapshots (recorded at the first step boundary
    at or past each requested time).
    """
    slip = u_slip if callable(u_slip) else (lambda t, _c=float(u_slip): _c)
    u_bound = max(abs(slip(s)) for s in np.linspace(0.0, max(t_end, 1e-12), 64))
    dt_max = stable_dt(fpgrid, potential, phys, u_max=u_bound, safety=0.9)
    if dt is None:
        dt = stable_dt(fpgrid, potential, phys, u_max=u_bound)
    elif dt > dt_max:
        raise FPError(
            f"dt={dt} violates the drift-diffusion stability bound {dt_max:.3e}"
        )
    if f0 is None:
        f = np.full((fpgrid.n_t, fpgrid.n_n), 1.0 / (4.0 * fpgrid.extent_t * fpgrid.extent_n))
    else:
        f = np.array(f0, dtype=float)
        if f.shape != (fpgrid.n_t, fpgrid.n_n):
            raise FPError(f"f0 shape {f.shape} != {(fpgrid.n_t, fpgrid.n_n)}")
        if np.any(f < 0):
            raise FPError("f0 must be nonnegative")
    mass0 = density_mass(fpgrid, f)

    U = potential.energy(fpgrid.center_points())
    _, yc = fpgrid.centers()
    D = phys.kB_T / phys.zeta
    dU_x = U[1:, :] - U[:-1, :]
    dU_y = U[:, 1:] - U[:, :-1]
    shear_gain = yc[None, :] * fpgrid.h_t / (D * potential.R)
    By_m = _bernoulli(dU_y)  # B(-s_y) with s_y = -dU_y
    By_p = _bernoulli(-dU_y)
    static_slip = not callable(u_slip)
    if static_slip:
        s_x = slip(0.0) * shear_gain - dU_x
        Bx_m = _bernoulli(-s_x)
        Bx_p = _bernoulli(s_x)

    n_steps = max(1, int(math.ceil(t_end / dt - 1e-12))) if t_end > 0 else 0
    if n_steps:
        dt = t_end / n_steps
    want = sorted(float(s) for s in record_times)
    times, history = [], []
    fx = np.zeros((fpgrid.n_t + 1, fpgrid.n_n))
    fy = np.zeros((fpgrid.n_t, fpgrid.n_n + 1))

    def snapshot(tnow):
        times.append(tnow)
        history.append(fp_moments(fpgrid, f, potential, phys))

    t = 0.0
    while want and want[0] <= t + 1e-12:
        snapshot(t)
        want.pop(0)
    for _ in range(n_steps):
        if not static_slip:
            s_x = slip(t) * shear_gain - dU_x
            Bx_m = _bernoulli(-s_x)
            Bx_p = _bernoulli(s_x)
        fx[1:-1, :] = (D / fpgrid.h_t) * (Bx_m * f[:-1, :] - Bx_p * f[1:, :])
        fy[:, 1:-1] = (D / fpgrid.h_n) * (By_m * f[:, :-1] - By_p * f[:, 1:])
        f = f - dt * (
            (fx[1:, :] - fx[:-1, :]) / fpgrid.h_t + (fy[:, 1:] - fy[:, :-1]) / fpgrid.h_n
        )
        t += dt
        while want and want[0] <= t + 1e-12:
            snapshot(t)
            want.pop(0)
    while want:  # requests at/past t_end land on the final boundary
        snapshot(t)
        want.pop(0)

    return FPResult(
        grid=fpgrid,
        density=f,
        t=t,
        mass_initial=mass0,
        mass_final=density_mass(fpgrid, f),
        times=times,
        moment_history=history,
    )


def free_energy(
    density: np.ndarray, fpgrid: FPGrid, potential: SpringPotential
) -> float:
    """Relative entropy of a cell density against Gibbs at equal mass.

    Nonnegative, zero exactly at Gibbs, and empty cells follow the
    0 log 0 = 0 convention.
    """
    mass = density_mass(fpgrid, density)
    if mass <= 0:
        raise FPError("density must carry positive mass")
    g = gibbs_density(fpgrid, potential, mass=mass)
    pos = density > 0
    ratio = density[pos] / g[pos]
    return float(np.sum(density[pos] * np.log(ratio)) * fpgrid.cell_area)
