"""Synthetic field generators used to train and test the reduced pipeline.

Two families are provided. ``analytic_plume`` is a closed-form moving
Gaussian hot spot, cheap enough for property tests and exact enough to act
as its own ground truth. ``solve_cavity`` is a small explicit
advection-diffusion solver on a square cavity with a prescribed
recirculating velocity field, a heated floor and a tunable inlet
temperature patch; it stands in for a full CFD campaign while exposing the
same two physical knobs (recirculation speed, inlet temperature).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Grid, ParamKind, SnapshotMatrix, TimeAxis
from .errors import DivergenceError, StabilityError


@dataclass(frozen=True)
class PlumeParams:
    """Moving-Gaussian family: delta controls the lateral sweep frequency."""

    delta: float
    theta_cold: float = 15.0
    theta_hot: float = 35.0
    sigma: float = 0.25

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if not self.theta_hot > self.theta_cold:
            raise ValueError("theta_hot must exceed theta_cold")


def analytic_plume(params: PlumeParams, grid: Grid, times: TimeAxis) -> SnapshotMatrix:
    """Closed-form hot spot drifting upward while sweeping sideways.

    The field at cell center (x, y) and instant t is

        theta_cold + (theta_hot - theta_cold)
                   * exp(-((x - xc(t))**2 + (y - yc(t))**2) / sigma**2)

    with xc(t) = 0.5*lx*(1 + 0.8*sin(2*pi*delta*t/t_final)) and
    yc(t) = ly*(0.2 + 0.6*t/t_final). Values stay in (theta_cold, theta_hot].
    """
    cx, cy = grid.cell_centers()
    t = times.instants()
    phase = 2.0 * math.pi * params.delta * t / times.t_final
    xc = 0.5 * grid.lx * (1.0 + 0.8 * np.sin(phase))
    yc = grid.ly * (0.2 + 0.6 * t / times.t_final)
    r2 = (cx[:, None] - xc[None, :]) ** 2 + (cy[:, None] - yc[None, :]) ** 2
    values = params.theta_cold + (params.theta_hot - params.theta_cold) * np.exp(
        -r2 / params.sigma**2
    )
    return SnapshotMatrix(grid, times, ParamKind.SYNTHETIC, params.delta, values)


def recirculating_velocity(u_ref: float, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Divergence-free single-vortex velocity sampled at cell centers.

    Derived from the stream function psi = u_ref*lx*sin(pi x/lx)*sin(pi y/ly)/pi
    via (u, v) = (d psi/dy, -d psi/dx), so the analytic divergence vanishes
    identically and both components are zero on the walls. Returns flat
    (n_cells,) arrays ordered like SnapshotMatrix rows.
    """
    if u_ref < 0.0:
        raise ValueError("u_ref must be nonnegative")
    cx, cy = grid.cell_centers()
    u = u_ref * (grid.lx / grid.ly) * np.sin(np.pi * cx / grid.lx) * np.cos(np.pi * cy / grid.ly)
    v = -u_ref * np.cos(np.pi * cx / grid.lx) * np.sin(np.pi * cy / grid.ly)
    return u, v


@dataclass(frozen=True)
class CavityParams:
    """Physical setup for the cavity runs.

    The floor is held at theta_hot, the remaining walls at theta_cold except
    for an inlet patch spanning the top 10% of the left wall, held at
    inlet_temperature. The initial field is uniform at theta_initial.
    """

    inlet_velocity: float
    inlet_temperature: float
    theta_hot: float = 35.0
    theta_cold: float = 15.0
    theta_initial: float = 15.0
    kappa: float = 2.0e-3

    def __post_init__(self) -> None:
        if self.inlet_velocity < 0.0:
            raise ValueError("inlet_velocity must be nonnegative")
        if not self.kappa > 0.0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True)
class SolverConfig:
    """Time integration controls: donor-cell advection, centered diffusion."""

    cfl: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")


def solve_cavity(
    params: CavityParams,
    grid: Grid,
    times: TimeAxis,
    config: SolverConfig = SolverConfig(),
    vary: ParamKind = ParamKind.VELOCITY,
) -> SnapshotMatrix:
    """Integrate the passive temperature equation on the cavity.

    Solves dT/dt + u . grad T = kappa * lap T with the prescribed
    recirculating velocity, first-order upwind advection and centered
    diffusion, recording the field at every instant of ``times``. Dirichlet
    values enter through ghost cells set directly to the wall temperature,
    which keeps every update a convex combination of neighbor values, so the
    discrete maximum principle holds by construction.

    Parameters
    ----------
    params : CavityParams
        Physical configuration (velocity scale, boundary temperatures, kappa).
    grid, times : Grid, TimeAxis
        Output sampling. Internal substeps are sized from the stability bound
        and land exactly on each sampling instant.
    config : SolverConfig
        CFL safety factor.
    vary : ParamKind
        Which knob the enclosing ensemble varies; decides the parameter value
        stored in the returned SnapshotMatrix.

    Raises
    ------
    StabilityError
        If an internal step exceeds its stability bound (defensive check).
    DivergenceError
        If any recorded snapshot contains non-finite values.
    """
    if vary == ParamKind.VELOCITY:
        param_value = params.inlet_velocity
    elif vary == ParamKind.TEMPERATURE:
        param_value = params.inlet_temperature
    else:
        raise ValueError("cavity runs vary either velocity or temperature")

    nx, ny = grid.nx, grid.ny
    dx, dy = grid.dx, grid.dy
    u_flat, v_flat = recirculating_velocity(params.inlet_velocity, grid)
    u = u_flat.reshape(ny, nx)
    v = v_flat.reshape(ny, nx)
    u_pos, u_neg = np.maximum(u, 0.0), np.minimum(u, 0.0)
    v_pos, v_neg = np.maximum(v, 0.0), np.minimum(v, 0.0)

    # Convex-combination stability: dt * (|u|/dx + |v|/dy + 2k/dx^2 + 2k/dy^2) <= 1.
    rate = np.abs(u) / dx + np.abs(v) / dy + 2.0 * params.kappa * (1.0 / dx**2 + 1.0 / dy**2)
    dt_stable = 1.0 / float(rate.max())
    dt_target = config.cfl * dt_stable

    # West ghost column: inlet patch on the top 10% of the left wall.
    _, cy = grid.cell_centers()
    y_col = cy.reshape(ny, nx)[:, 0]
    west = np.where(y_col > 0.9 * grid.ly, params.inlet_temperature, params.theta_cold)

    field = np.full((ny, nx), params.theta_initial)
    padded = np.empty((ny + 2, nx + 2))
    out = np.empty((grid.n_cells, times.n_steps))
    out[:, 0] = field.ravel()

    instants = times.instants()
    for l in range(1, times.n_steps):
        span = instants[l] - instants[l - 1]
        n_sub = max(1, math.ceil(span / dt_target))
        dt = span / n_sub
        if dt > dt_stable * (1.0 + 1e-12):
            raise StabilityError(
                f"substep {dt:.3e}s exceeds stability bound {dt_stable:.3e}s"
            )
        for _ in range(n_sub):
            padded[1:-1, 1:-1] = field
            padded[1:-1, 0] = west            # left wall / inlet patch
            padded[1:-1, -1] = params.theta_cold
            padded[0, 1:-1] = params.theta_hot  # heated floor at y = 0
            padded[-1, 1:-1] = params.theta_cold
            center = padded[1:-1, 1:-1]
            west_n = padded[1:-1, :-2]
            east_n = padded[1:-1, 2:]
            south_n = padded[:-2, 1:-1]
            north_n = padded[2:, 1:-1]
            adv = (
                u_pos * (center - west_n) / dx
                + u_neg * (east_n - center) / dx
                + v_pos * (center - south_n) / dy
                + v_neg * (north_n - center) / dy
            )
            diff = params.kappa * (
                (east_n - 2.0 * center + west_n) / dx**2
                + (north_n - 2.0 * center + south_n) / dy**2
            )
            field = field + dt * (diff - adv)
        if not np.isfinite(field).all():
            raise DivergenceError(f"non-finite values at t = {instants[l]:.6g}s")
        out[:, l] = field.ravel()

    return SnapshotMatrix(grid, times, vary, param_value, out)
