"""Dynamic wall-stress law and its exact-exponential time integration.

The boundary trace g = 2(D(u)n)*tau + (alpha/2) u*tau relaxes as

    (d/dt + 1/Wi) g = -(alpha*Re/tau) u*tau

so over one step g is advanced by the exact exponential with the slip
history entering through a discounted integral (Duhamel form).  The wall
vorticity follows from g via omega_wall = g + beta * u*tau with
beta = 2*kappa - alpha/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import WallTrace
from .params import SimParams


@dataclass(frozen=True)
class WallOrientation:
    """Outward normal and counterclockwise tangent of one wall."""

    name: str
    normal: tuple[float, float]
    tangent: tuple[float, float]

    @property
    def tangent_sign(self) -> float:
        """Sign relating u*tau to the x-velocity component at this wall."""
        return self.tangent[0]


ORIENT_TOP = WallOrientation("top", normal=(0.0, 1.0), tangent=(-1.0, 0.0))
ORIENT_BOTTOM = WallOrientation("bottom", normal=(0.0, -1.0), tangent=(1.0, 0.0))


def orientation(name: str) -> WallOrientation:
    if name == "top":
        return ORIENT_TOP
    if name == "bottom":
        return ORIENT_BOTTOM
    raise ValueError(f"unknown wall {name!r}")


@dataclass(frozen=True)
class BoundaryStressState:
    """Per-wall boundary stress trace with its Duhamel bookkeeping.

    The identity g = exp(-t/Wi) g0 - (alpha*Re/tau) accum holds exactly
    under the stepping recursion; t is time since g0 was snapshotted.
    """

    g: np.ndarray
    g0: np.ndarray
    accum: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "g0", np.atleast_1d(np.asarray(self.g0, dtype=float)))
        object.__setattr__(self, "accum", np.atleast_1d(np.asarray(self.accum, dtype=float)))
        if self.g0.shape != g.shape or self.accum.shape != g.shape:
            raise ValueError("g, g0 and accum must share a shape")

    @classmethod
    def from_g(cls, g) -> "BoundaryStressState":
        g = np.atleast_1d(np.asarray(g, dtype=float))
        return cls(g=g.copy(), g0=g.copy(), accum=np.zeros_like(g), t=0.0)

    def identity_residual(self, params: SimParams) -> float:
        """Max deviation from the Duhamel identity (diagnostic)."""
        pred = math.exp(-self.t / params.Wi) * self.g0 - (
            params.alpha * params.Re / params.tau
        ) * self.accum
        return float(np.max(np.abs(self.g - pred)))


def exp_weights(dt: float, Wi: float) -> tuple[float, float, float]:
    """Decay factor and endpoint weights of the exponential trapezoid.

    Returns (E, w0, w1) with E = exp(-dt/Wi) and
    integral_0^dt exp(-(dt-s)/Wi) u(s) ds = w0*u(0) + w1*u(dt)
    exact for linear-in-time u.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    em = -math.expm1(-dt / Wi)  # 1 - exp(-dt/Wi) without cancellation
    E = 1.0 - em
    I0 = Wi * em
    I1 = Wi * dt - Wi * Wi * em
    w1 = I1 / dt if dt > 0 else 0.0
    return E, I0 - w1, w1


def step_boundary_ode(
    state: BoundaryStressState,
    u_tau,
    params: SimParams,
    dt: float,
    u_tau_end=None,
) -> BoundaryStressState:
    """Advance g over one step by the exact exponential integrator.

    With only ``u_tau`` the slip is held constant over the step; passing
    ``u_tau_end`` as well uses the exponential trapezoid (second order).
    """
    E, w0, w1 = exp_weights(dt, params.Wi)
    u0 = np.asarray(u_tau, dtype=float)
    if u_tau_end is None:
        quad = params.Wi * (1.0 - E) * u0
    else:
        quad = w0 * u0 + w1 * np.asarray(u_tau_end, dtype=float)
    coef = params.alpha * params.Re / params.tau
    return BoundaryStressState(
        g=E * state.g - coef * quad,
        g0=state.g0,
        accum=E * state.accum + quad,
        t=state.t + dt,
    )


def duhamel_boundary(g0, times, u_tau_series, params: SimParams, t: float):
    """Evaluate g(t) from the slip history by piecewise-linear quadrature.

    ``times`` is an increasing sample grid starting at 0 and ``u_tau_series``
    the matching slip samples (leading axis = time).  The result is exact for
    slip histories linear on each sample interval.
    """
    times = np.asarray(times, dtype=float)
    u = np.asarray(u_tau_series, dtype=float)
    if times.ndim != 1 or len(times) != u.shape[0]:
        raise ValueError("times and u_tau_series must align on the leading axis")
    if times[0] != 0.0:
        raise ValueError("history must start at time 0")
    if t < -1e-15 or t > times[-1] + 1e-12:
        raise ValueError(f"t={t} outside the sampled history [0, {times[-1]}]")
    g0 = np.asarray(g0, dtype=float)
    coef = params.alpha * params.Re / params.tau
    acc = np.zeros_like(u[0], dtype=float)
    reached = 0.0
    for i in range(len(times) - 1):
        t0, t1 = times[i], times[i + 1]
        if t0 >= t - 1e-15:
            break
        u0, u1 = u[i], u[i + 1]
        if t1 > t:  # partial last segment
            frac = (t - t0) / (t1 - t0)
            u1 = u0 + frac * (u1 - u0)
            t1 = t
        E, w0, w1 = exp_weights(t1 - t0, params.Wi)
        acc = E * acc + w0 * u0 + w1 * u1
        reached = t1
    E_tail = math.exp(-(t - reached) / params.Wi) if t > reached else 1.0
    return math.exp(-t / params.Wi) * g0 - coef * E_tail * acc


def wall_vorticity(g, u_tau, params: SimParams):
    """omega at the wall from the stress trace: g + (2*kappa - alpha/2)*u_tau."""
    if isinstance(g, WallTrace) or isinstance(u_tau, WallTrace):
        return WallTrace(
            top=wall_vorticity(g.top, u_tau.top, params),
            bottom=wall_vorticity(g.bottom, u_tau.bottom, params),
        )
    return np.asarray(g, dtype=float) + params.beta * np.asarray(u_tau, dtype=float)


def steady_slip_velocity(params: SimParams, wall_shear) -> float:
    """Equilibrium slip for a held wall shear (parabolic-profile scale).

    Balances the steady wall law: the shear that a no-polymer profile would
    exert at the wall is divided by alpha/2 + alpha*Re*Wi/tau.
    """
    return np.asarray(wall_shear, dtype=float) / (
        params.alpha / 2.0 + params.friction_ratio
    )
