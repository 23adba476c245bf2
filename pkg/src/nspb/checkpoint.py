"""Binary checkpoint format for restartable runs.

Layout (little endian): magic b"NSPB", version u32, nx u32, ny u32,
t f64, dt f64, then row-major f64 arrays in order: physical total
vorticity (ny*nx), mean profile (ny), g_top (nx), g_bottom (nx),
slip accumulator top (nx), slip accumulator bottom (nx).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .flow import FlowState
from .grid import ChannelGrid, Field2D
from .wallbc import BoundaryStressState

MAGIC = b"NSPB"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


class CheckpointError(RuntimeError):
    """Malformed or incompatible checkpoint file."""


def write_checkpoint(path, state: FlowState, dt: float, total_omega=None) -> None:
    """Serialize a state; pass the reconstructed total vorticity when the
    state's omega field holds only the fluctuation part."""
    grid = state.omega.grid
    omega_vals = state.omega.values if total_omega is None else np.asarray(total_omega)
    parts = [_HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny, state.t, dt)]
    for arr in (
        omega_vals,
        state.mean_u,
        state.bc_top.g,
        state.bc_bottom.g,
        state.bc_top.accum,
        state.bc_bottom.accum,
    ):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_checkpoint(path, lx: float = 2.0 * np.pi):
    """Load (grid, state, dt); the channel length is not stored and must
    match the original run's configuration."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, nx, ny, t, dt = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    sizes = [ny * nx, ny, nx, nx, nx, nx]
    need = _HEADER.size + 8 * sum(sizes)
    if len(raw) != need:
        raise CheckpointError(f"{path}: expected {need} bytes, found {len(raw)}")
    offset = _HEADER.size
    arrays = []
    for n in sizes:
        arrays.append(np.frombuffer(raw, dtype="<f8", count=n, offset=offset).copy())
        offset += 8 * n
    omega_vals = arrays[0].reshape(ny, nx)
    grid = ChannelGrid(nx=nx, ny=ny, lx=lx)
    state = _state_from_arrays(grid, omega_vals, arrays[1], arrays[2], arrays[3], arrays[4], arrays[5], t, dt)
    return grid, state, dt


def _state_from_arrays(grid, omega_vals, mean_u, g_top, g_bot, acc_top, acc_bot, t, dt):
    spec = grid.phys_to_spec(omega_vals)
    spec[:, 0] = 0.0  # the stored field is total vorticity; k=0 lives in mean_u
    # a restarted segment re-anchors the Duhamel identity at the load point
    bc_top = BoundaryStressState(g=g_top.copy(), g0=g_top.copy(), accum=acc_top, t=0.0)
    bc_bot = BoundaryStressState(g=g_bot.copy(), g0=g_bot.copy(), accum=acc_bot, t=0.0)
    return FlowState(
        omega=Field2D(grid, spectral=spec),
        mean_u=mean_u,
        bc_top=bc_top,
        bc_bottom=bc_bot,
        t=t,
        step_index=int(round(t / dt)),
    )
