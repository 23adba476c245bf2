"""Semi-implicit channel solver with the dynamic wall-stress closure.

Fluctuation vorticity (Fourier modes k != 0) and the mean profile U0(y)
are advanced by a one-step predictor-corrector: implicit Euler predictor,
Crank-Nicolson diffusion with Heun advection in the corrector.  The wall
law is closed implicitly per mode by a 2x2 influence solve that makes the
imposed wall vorticity g + beta*u_tau consistent with the slip the new
field itself induces; this keeps the scheme stable for arbitrarily stiff
wall friction.  In "euler" mode diffusion and the wall law are switched
off and the same advection terms are advanced explicitly (Heun).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .elliptic import SolverError, TauSolver, _bc_row, _diff_matrices, biot_savart
from .grid import (
    ChannelGrid,
    Field2D,
    WallTrace,
    cheb_derivative_coeffs,
    cheb_forward,
    cheb_inverse,
)
from .params import SimParams
from .wallbc import BoundaryStressState, exp_weights, step_boundary_ode

_MODES = ("navier_stokes", "euler")
_FORCINGS = ("zero", "steady_pressure_gradient")


class CFLError(RuntimeError):
    """Advective CFL number exceeded the configured bound."""


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    mode: str = "navier_stokes"
    forcing: str = "zero"
    forcing_amplitude: float = 0.0
    cfl_max: float = 0.5
    checkpoint_every: int = 1000
    record_every: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be nonnegative, got {self.t_end!r}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.forcing not in _FORCINGS:
            raise ValueError(f"forcing must be one of {_FORCINGS}, got {self.forcing!r}")
        if not (0.0 < self.cfl_max < 1.0):
            raise ValueError(f"cfl_max must lie in (0, 1), got {self.cfl_max!r}")
        if self.checkpoint_every < 1 or self.record_every < 1:
            raise ValueError("checkpoint_every and record_every must be >= 1")

    @property
    def mean_force(self) -> float:
        return self.forcing_amplitude if self.forcing == "steady_pressure_gradient" else 0.0


@dataclass(frozen=True)
class FlowState:
    """Solver state: fluctuation vorticity, mean profile, wall stresses."""

    omega: Field2D
    mean_u: np.ndarray
    bc_top: BoundaryStressState
    bc_bottom: BoundaryStressState
    t: float = 0.0
    step_index: int = 0

    def with_(self, **kw) -> "FlowState":
        return replace(self, **kw)


def _zero_mean_column(spec: np.ndarray) -> np.ndarray:
    out = spec.copy()
    out[:, 0] = 0.0
    return out


def initial_state(
    grid: ChannelGrid,
    params: SimParams,
    u=None,
    v=None,
    g_top=None,
    g_bottom=None,
) -> FlowState:
    """Build a state from velocity samples (physical arrays or Field2D).

    The wall stress is initialized compatibly, g = omega_wall - beta*u_tau,
    unless explicit traces are given.  Inputs are dealiased in x.

    The default g uses the slip traces of the velocity *reconstructed* from
    the vorticity, not the raw input traces.  The two differ by the
    solenoidal projection and the tau truncation, and the solver's wall law
    closes on the reconstructed trace; seeding g from the raw input leaves
    the state off the discrete constraint manifold, which costs a full
    order of time accuracy in a wall layer.
    """
    if u is None:
        u = np.zeros((grid.ny, grid.nx))
    if v is None:
        v = np.zeros((grid.ny, grid.nx))
    uf = u if isinstance(u, Field2D) else Field2D(grid, values=u)
    vf = v if isinstance(v, Field2D) else Field2D(grid, values=v)
    uf = uf.dealias()
    vf = vf.dealias()
    omega_full = vf.ddx() - uf.ddy()
    mean_u = cheb_inverse(uf.spectral[:, 0].real.copy())
    omega_f = Field2D(grid, spectral=_zero_mean_column(omega_full.spectral))

    if g_top is None or g_bottom is None:
        u_rec, _ = biot_savart(omega_f)
        u_rec_top = u_rec.values[0] + mean_u[0]
        u_rec_bot = u_rec.values[-1] + mean_u[-1]
        mean_coeffs = cheb_forward(mean_u.copy())
        mean_om = -cheb_inverse(cheb_derivative_coeffs(mean_coeffs))
        om_vals = omega_f.values
        if g_top is None:
            g_top = (om_vals[0] + mean_om[0]) - params.beta * (-u_rec_top)
        if g_bottom is None:
            g_bottom = (om_vals[-1] + mean_om[-1]) - params.beta * u_rec_bot
    return FlowState(
        omega=omega_f,
        mean_u=mean_u,
        bc_top=BoundaryStressState.from_g(np.broadcast_to(np.asarray(g_top, float), (grid.nx,))),
        bc_bottom=BoundaryStressState.from_g(np.broadcast_to(np.asarray(g_bottom, float), (grid.nx,))),
        t=0.0,
        step_index=0,
    )


def slip_poiseuille_profile(params: SimParams, F: float, y: np.ndarray) -> np.ndarray:
    """Analytic steady profile under a mean force F: parabola plus slip.

    friction_ratio - beta = alpha/2 + alpha*Re*Wi/tau - 2*kappa; the
    kappa=0 case is the Navier-friction slip of steady_slip_velocity.
    """
    s = params.Re * F / (params.friction_ratio - params.beta)
    return params.Re * F / 2.0 * (1.0 - y**2) + s


def steady_channel_state(grid: ChannelGrid, params: SimParams, F: float) -> FlowState:
    """The exact steady state of the forced channel (a solver fixed point)."""
    prof = slip_poiseuille_profile(params, F, grid.y)
    u = np.repeat(prof[:, None], grid.nx, axis=1)
    return initial_state(grid, params, u=u)


class _Tau1D:
    """Single-profile (lam - d^2/dy^2) solve with boundary rows."""

    def __init__(self, ny: int, lam: float, bc_top, bc_bottom):
        _, D2 = _diff_matrices(ny)
        A = lam * np.eye(ny) - D2
        A[-2, :] = _bc_row(ny, "top", *bc_top)
        A[-1, :] = _bc_row(ny, "bottom", *bc_bottom)
        self._lu = scipy.linalg.lu_factor(A)

    def solve(self, rhs_coeffs: np.ndarray, c_top: float, c_bottom: float) -> np.ndarray:
        b = np.array(rhs_coeffs, dtype=float)
        b[-2] = c_top
        b[-1] = c_bottom
        return scipy.linalg.lu_solve(self._lu, b)


class _StageWorkspace:
    """Influence-matrix data for one implicit coefficient lam."""

    def __init__(self, solver: "ChannelFlowSolver", lam: float):
        grid = solver.grid
        self.lam = lam
        self.dirichlet = TauSolver(grid, lam, (1.0, 0.0), (1.0, 0.0))
        ny = grid.ny
        zeros = np.zeros(ny)
        self.unit_top = np.zeros((ny, solver.jmax + 1))
        self.unit_bot = np.zeros((ny, solver.jmax + 1))
        self.kinv = np.zeros((solver.jmax + 1, 2, 2))
        c2 = solver.c2
        for j in range(1, solver.jmax + 1):
            ut_prof = self.dirichlet.solve_mode(j, zeros, 1.0, 0.0).real
            ub_prof = self.dirichlet.solve_mode(j, zeros, 0.0, 1.0).real
            self.unit_top[:, j] = ut_prof
            self.unit_bot[:, j] = ub_prof
            a_tt, a_bt = solver._wall_u_traces_mode(j, ut_prof)
            a_tb, a_bb = solver._wall_u_traces_mode(j, ub_prof)
            K = np.array(
                [
                    [1.0 + c2 * a_tt.real, c2 * a_tb.real],
                    [-c2 * a_bt.real, 1.0 - c2 * a_bb.real],
                ]
            )
            try:
                self.kinv[j] = np.linalg.inv(K)
            except np.linalg.LinAlgError as exc:  # pragma: no cover
                raise SolverError(f"singular wall influence matrix at mode {j}") from exc


class ChannelFlowSolver:
    """Time stepper for the channel with the dynamic wall law."""

    def __init__(self, grid: ChannelGrid, params: SimParams, config: SolverConfig):
        self.grid = grid
        self.params = params
        self.config = config
        self.jmax = grid.dealias_kx
        ny = grid.ny
        self._D, self._D2 = _diff_matrices(ny)
        self._signs = np.where(np.arange(ny) % 2 == 0, 1.0, -1.0)
        self._poisson = TauSolver(grid, 0.0, (1.0, 0.0), (1.0, 0.0))

        dt = config.dt
        Re = params.Re
        self._E, self._w0, self._w1 = exp_weights(dt, params.Wi)
        self._slip_coef = params.alpha * Re / params.tau
        self.c2 = params.beta - self._slip_coef * self._w1

        if config.mode == "navier_stokes":
            self._stage_p = _StageWorkspace(self, Re / dt)
            self._stage_c = _StageWorkspace(self, 2.0 * Re / dt)
            self._mean_p = _Tau1D(ny, Re / dt, (self.c2, -1.0), (self.c2, 1.0))
            self._mean_c = _Tau1D(ny, 2.0 * Re / dt, (self.c2, -1.0), (self.c2, 1.0))

    # ---- per-mode helpers ----

    def _wall_u_traces_mode(self, j: int, omega_col: np.ndarray):
        """u traces at (top, bottom) induced by one vorticity mode."""
        psi = self._poisson.solve_mode(j, -np.asarray(omega_col, dtype=complex))
        ucol = -cheb_derivative_coeffs(psi)
        return ucol.sum(), self._signs @ ucol

    def _velocity_spectral(self, omega_spec: np.ndarray):
        """(u, v) spectral arrays of the fluctuation field."""
        ny, nk = omega_spec.shape
        u = np.zeros((ny, nk), dtype=complex)
        v = np.zeros((ny, nk), dtype=complex)
        for j in range(1, self.jmax + 1):
            psi = self._poisson.solve_mode(j, -omega_spec[:, j])
            u[:, j] = -cheb_derivative_coeffs(psi)
            v[:, j] = 1j * self.grid.kx[j] * psi
        return u, v

    # ---- nonlinear terms ----

    def _nonlinear(self, omega_spec: np.ndarray, mean_coeffs: np.ndarray):
        """Advection for the fluctuation and the mean-flow exchange profile.

        Returns (N_spec, R_coeffs, aux) with N = -(u.grad omega) restricted
        to k != 0, R(y) the x-mean of v*omega (the mean-momentum source),
        and aux carrying physical velocities and wall slip traces.
        """
        grid = self.grid
        u_spec, v_spec = self._velocity_spectral(omega_spec)
        mean_phys = cheb_inverse(mean_coeffs)
        mean_om_coeffs = -cheb_derivative_coeffs(mean_coeffs)
        mean_om_grad = cheb_inverse(cheb_derivative_coeffs(mean_om_coeffs))

        u_tot = grid.spec_to_phys(u_spec) + mean_phys[:, None]
        v_phys = grid.spec_to_phys(v_spec)
        om_phys = grid.spec_to_phys(omega_spec)
        om_x = grid.spec_to_phys(omega_spec * (1j * grid.kx))
        om_y = grid.spec_to_phys(cheb_derivative_coeffs(omega_spec)) + mean_om_grad[:, None]

        adv = grid.phys_to_spec(u_tot * om_x + v_phys * om_y)
        adv[:, self.jmax + 1 :] = 0.0
        adv[grid.dealias_cheb + 1 :, :] = 0.0
        N = -adv
        N[:, 0] = 0.0

        prod = grid.phys_to_spec(v_phys * om_phys)
        R = prod[:, 0].real.copy()
        R[grid.dealias_cheb + 1 :] = 0.0

        aux = {
            "u_tot": u_tot,
            "v": v_phys,
            "u_tau_top": -u_tot[0],
            "u_tau_bot": u_tot[-1].copy(),
        }
        return N, R, aux

    def _check_cfl(self, aux, t: float):
        speed = max(float(np.max(np.abs(aux["u_tot"]))), float(np.max(np.abs(aux["v"]))))
        dx_min = min(self.grid.dx, self.grid.dy_min)
        cfl = self.config.dt * speed / dx_min
        if cfl > self.config.cfl_max:
            raise CFLError(
                f"CFL {cfl:.3f} > {self.config.cfl_max} at t={t:.6g} "
                f"(max speed {speed:.4g}, min spacing {dx_min:.4g})"
            )

    # ---- implicit stage ----

    def _implicit_stage(self, ws: _StageWorkspace, rhs_spec, qhat_top, qhat_bot):
        """Solve (lam + k^2 - D^2) with the wall law closed per mode."""
        ny, nk = rhs_spec.shape
        out = np.zeros((ny, nk), dtype=complex)
        c2 = self.c2
        for j in range(1, self.jmax + 1):
            part = ws.dirichlet.solve_mode(j, rhs_spec[:, j], 0.0, 0.0)
            ut_p, ub_p = self._wall_u_traces_mode(j, part)
            b0 = qhat_top[j] - c2 * ut_p
            b1 = qhat_bot[j] + c2 * ub_p
            ki = ws.kinv[j]
            d_t = ki[0, 0] * b0 + ki[0, 1] * b1
            d_b = ki[1, 0] * b0 + ki[1, 1] * b1
            out[:, j] = part + d_t * ws.unit_top[:, j] + d_b * ws.unit_bot[:, j]
        return out

    # ---- stepping ----

    def step(self, state: FlowState) -> FlowState:
        if self.config.mode == "euler":
            return self._step_euler(state)
        return self._step_ns(state)

    def _step_ns(self, state: FlowState) -> FlowState:
        grid, params, cfg = self.grid, self.params, self.config
        dt, Re = cfg.dt, params.Re
        F = cfg.mean_force
        mean_coeffs = cheb_forward(state.mean_u.copy())
        om = state.omega.spectral

        N_n, R_n, aux_n = self._nonlinear(om, mean_coeffs)
        self._check_cfl(aux_n, state.t)

        # wall data pieces that depend only on the step start
        q_top = self._E * state.bc_top.g - self._slip_coef * self._w0 * aux_n["u_tau_top"]
        q_bot = self._E * state.bc_bottom.g - self._slip_coef * self._w0 * aux_n["u_tau_bot"]
        qhat_top = np.fft.rfft(q_top) / grid.nx
        qhat_bot = np.fft.rfft(q_bot) / grid.nx
        qbar_top = float(np.mean(q_top))
        qbar_bot = float(np.mean(q_bot))

        lam_p = Re / dt
        rhs_p = lam_p * om + Re * N_n
        om_star = self._implicit_stage(self._stage_p, rhs_p, qhat_top, qhat_bot)
        force = np.zeros(grid.ny)
        force[0] = F
        mean_rhs_p = lam_p * mean_coeffs + Re * (R_n + force)
        mean_star = self._mean_p.solve(mean_rhs_p, qbar_top, -qbar_bot)

        N_s, R_s, _ = self._nonlinear(om_star, mean_star)

        lam_c = 2.0 * Re / dt
        ksq = self.grid.kx**2
        rhs_c = lam_c * om - ksq * om + self._D2 @ om + Re * (N_n + N_s)
        om_new = self._implicit_stage(self._stage_c, rhs_c, qhat_top, qhat_bot)
        mean_rhs_c = lam_c * mean_coeffs + self._D2 @ mean_coeffs + Re * (R_n + R_s + 2.0 * force)
        mean_new = self._mean_c.solve(mean_rhs_c, qbar_top, -qbar_bot)

        # final slip traces close the boundary-stress update
        u_new, _ = self._velocity_spectral(om_new)
        mean_new_phys = cheb_inverse(mean_new.copy())
        u_top = self.grid.spec_to_phys(u_new)[0] + mean_new_phys[0]
        u_bot = self.grid.spec_to_phys(u_new)[-1] + mean_new_phys[-1]
        u_tau_top_new = -u_top
        u_tau_bot_new = u_bot
        bc_top = step_boundary_ode(
            state.bc_top, aux_n["u_tau_top"], params, dt, u_tau_end=u_tau_top_new
        )
        bc_bot = step_boundary_ode(
            state.bc_bottom, aux_n["u_tau_bot"], params, dt, u_tau_end=u_tau_bot_new
        )

        return FlowState(
            omega=Field2D(grid, spectral=om_new),
            mean_u=mean_new_phys,
            bc_top=bc_top,
            bc_bottom=bc_bot,
            t=state.t + dt,
            step_index=state.step_index + 1,
        )

    def _step_euler(self, state: FlowState) -> FlowState:
        cfg = self.config
        dt = cfg.dt
        F = cfg.mean_force
        mean_coeffs = cheb_forward(state.mean_u.copy())
        om = state.omega.spectral
        force = np.zeros(self.grid.ny)
        force[0] = F

        N_n, R_n, aux_n = self._nonlinear(om, mean_coeffs)
        self._check_cfl(aux_n, state.t)
        om_star = om + dt * N_n
        mean_star = mean_coeffs + dt * (R_n + force)

        N_s, R_s, _ = self._nonlinear(om_star, mean_star)
        om_new = om + 0.5 * dt * (N_n + N_s)
        mean_new = mean_coeffs + 0.5 * dt * (R_n + R_s + 2.0 * force)

        return FlowState(
            omega=Field2D(self.grid, spectral=om_new),
            mean_u=cheb_inverse(mean_new.copy()),
            bc_top=state.bc_top,
            bc_bottom=state.bc_bottom,
            t=state.t + dt,
            step_index=state.step_index + 1,
        )

    def run(self, state: FlowState, t_end: float | None = None, callback=None) -> FlowState:
        """Step until t_end (default: config.t_end); t_end=t is a no-op."""
        if t_end is None:
            t_end = self.config.t_end
        span = t_end - state.t
        if span < -1e-12:
            raise ValueError(f"t_end={t_end} lies before state.t={state.t}")
        n = int(round(span / self.config.dt))
        if abs(n * self.config.dt - span) > 1e-9 * max(1.0, abs(span)):
            raise ValueError(
                f"t_end - t = {span} is not an integer number of steps of dt={self.config.dt}"
            )
        for _ in range(n):
            state = self.step(state)
            if callback is not None:
                callback(state)
        return state

    # ---- reconstruction ----

    def velocity(self, state: FlowState) -> tuple[Field2D, Field2D]:
        u_spec, v_spec = self._velocity_spectral(state.omega.spectral)
        u = self.grid.spec_to_phys(u_spec) + state.mean_u[:, None]
        return Field2D(self.grid, values=u), Field2D(self.grid, spectral=v_spec)

    def total_vorticity(self, state: FlowState) -> Field2D:
        mean_coeffs = cheb_forward(state.mean_u.copy())
        om_bar = cheb_inverse(-cheb_derivative_coeffs(mean_coeffs))
        return Field2D(self.grid, values=state.omega.values + om_bar[:, None])

    def slip_traces(self, state: FlowState) -> WallTrace:
        u, _ = self.velocity(state)
        v = u.values
        return WallTrace(top=-v[0], bottom=v[-1].copy())


def velocity_of_state(grid: ChannelGrid, state: FlowState) -> tuple[Field2D, Field2D]:
    """Velocity reconstruction without a solver instance (diagnostics path)."""
    from .elliptic import biot_savart

    u_f, v_f = biot_savart(state.omega)
    u = u_f.values + state.mean_u[:, None]
    return Field2D(grid, values=u), v_f
