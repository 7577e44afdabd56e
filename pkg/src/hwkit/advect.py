"""Time-advance engines: backward semi-Lagrangian steps (1D exact shift,
2D two-level characteristics), conservative RK4 finite-difference stepping,
and the one-way semi-Lagrangian to finite-difference switch."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.ndimage import map_coordinates

from .grid import PERIODIC, Field, Grid1D, Grid2D, field_norms
from .reconstruct_fd import divergence_1d, divergence_2d
from .reconstruct_sl import (WENO_EPS, SplineInterpolant1D, interp2d_scattered,
                             shift_periodic)

SL_SCHEMES = ("sl-spline", "sl-hweno3", "sl-hweno5")
FD_SCHEMES = ("fd-weno5", "fd-hweno5")
SCHEMES = SL_SCHEMES + FD_SCHEMES + ("mixed",)


class StepFailureError(RuntimeError):
    """An engine step could not be completed (diverged characteristics)."""


class CFLViolationError(RuntimeError):
    """Requested time step exceeds the stability bound of the FD engine."""


@dataclass
class SchemeConfig:
    """Scheme selection and the few numerical knobs shared by the engines."""

    scheme: str = "sl-hweno5"
    cfl_linear: float = 2.5
    cfl_nonlinear: float = 0.85
    eps: float = WENO_EPS
    fp_tol: float = 1e-12
    fp_maxiter: int = 25
    mixed_switch: bool = True
    splitting: str = "upwind"
    # the classical baseline runs with its own, smaller regularizer floor
    eps_js: float = 1e-9

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.cfl_linear <= 0 or self.cfl_nonlinear <= 0:
            raise ValueError("CFL numbers must be positive")
        if self.scheme in FD_SCHEMES or self.scheme == "mixed":
            if self.cfl_nonlinear > 1.0:
                raise ValueError("FD stepping requires cfl_nonlinear <= 1")

    @property
    def sl_interp(self) -> str:
        if self.scheme == "sl-spline":
            return "spline"
        if self.scheme == "sl-hweno3":
            return "hweno3"
        # mixed runs its semi-Lagrangian phase with the fifth-order kernel
        return "hweno5"

    @property
    def fd_recon(self) -> str:
        return "weno5" if self.scheme == "fd-weno5" else "hweno5"

    def eps_for(self, recon: str) -> float:
        return self.eps if recon == "hweno5" else self.eps_js


# ---------------------------------------------------------------------------
# semi-Lagrangian steps

def sl_step_const_1d(f: Field, a: float, dt: float, kind: str,
                     eps: float = WENO_EPS) -> Field:
    """One backward step of constant-velocity 1D transport on a periodic
    grid: new f(x_i) interpolates the old field at x_i - a dt."""
    grid = f.grid
    if not (isinstance(grid, Grid1D) and grid.bc == PERIODIC):
        raise ValueError("constant-shift step requires a periodic 1D grid")
    if dt == 0.0:
        return f.copy()
    if kind == "spline":
        spline = SplineInterpolant1D(f)
        return Field(grid, spline(grid.nodes() - a * dt))
    return Field(grid, shift_periodic(f.values, a * dt / grid.dx, kind, eps))


@dataclass
class VelocityField2D:
    """Node-sampled velocity (ax, ay) on a 2D grid with bilinear off-grid
    evaluation; evaluation clamps to the grid edge."""

    grid: Grid2D
    ax: np.ndarray
    ay: np.ndarray

    def max_speed(self) -> tuple[float, float]:
        return float(np.max(np.abs(self.ax))), float(np.max(np.abs(self.ay)))

    def cfl_dt(self, cfl: float) -> float:
        sx, sy = self.max_speed()
        bound = min(self.grid.dx / max(sx, 1e-300), self.grid.dy / max(sy, 1e-300))
        return cfl * bound

    def at(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        px = np.clip((x - g.x_min) / g.dx, 0.0, g.nx - 1.0)
        py = np.clip((y - g.y_min) / g.dy, 0.0, g.ny - 1.0)
        ix = np.minimum(px.astype(np.int64), g.nx - 2)
        iy = np.minimum(py.astype(np.int64), g.ny - 2)
        tx = px - ix
        ty = py - iy
        w00 = (1.0 - tx) * (1.0 - ty)
        w10 = tx * (1.0 - ty)
        w01 = (1.0 - tx) * ty
        w11 = tx * ty
        ax = (w00 * self.ax[ix, iy] + w10 * self.ax[ix + 1, iy]
              + w01 * self.ax[ix, iy + 1] + w11 * self.ax[ix + 1, iy + 1])
        ay = (w00 * self.ay[ix, iy] + w10 * self.ay[ix + 1, iy]
              + w01 * self.ay[ix, iy + 1] + w11 * self.ay[ix + 1, iy + 1])
        return ax, ay


def _interp2d(f: Field, xd: np.ndarray, yd: np.ndarray, kind: str,
              eps: float) -> np.ndarray:
    """Interpolate a 2D field at departure points (physical coordinates);
    points outside the domain read as zero."""
    g = f.grid
    px = (xd - g.x_min) / g.dx
    py = (yd - g.y_min) / g.dy
    if kind == "spline":
        vals = map_coordinates(f.values, [px.ravel(), py.ravel()], order=3,
                               mode="constant", cval=0.0, prefilter=True)
    else:
        vals = interp2d_scattered(f.values, px, py, kind, eps)
    return vals.reshape(xd.shape)


def _solve_displacement(vel: VelocityField2D, span: float, theta: float,
                        tol: float, maxiter: int,
                        d_init: tuple[np.ndarray, np.ndarray] | None):
    """Fixed point d = span * A(x - theta*d) over all nodes at once."""
    g = vel.grid
    xx, yy = g.meshgrid()
    if d_init is None:
        ax, ay = vel.ax, vel.ay
        dx_, dy_ = span * ax, span * ay
    else:
        dx_, dy_ = d_init[0].copy(), d_init[1].copy()
    limit = 2.0 * max(g.x_max - g.x_min, g.y_max - g.y_min)
    for _ in range(maxiter):
        ax, ay = vel.at(xx - theta * dx_, yy - theta * dy_)
        ndx, ndy = span * ax, span * ay
        err = max(float(np.max(np.abs(ndx - dx_))), float(np.max(np.abs(ndy - dy_))))
        dx_, dy_ = ndx, ndy
        if err < tol:
            break
    if float(np.max(np.hypot(dx_, dy_))) > limit:
        raise StepFailureError("characteristic displacement exceeds the domain size")
    return xx, yy, dx_, dy_


def sl_step_midpoint_2d(f: Field, vel: VelocityField2D, dt: float, kind: str,
                        eps: float = WENO_EPS, fp_tol: float = 1e-12,
                        fp_maxiter: int = 25, d_init=None):
    """Single-level second-order backward step: d = dt A(x - d/2), then
    interpolate the current field at x - d.  Used to bootstrap the two-level
    scheme and after time-step changes."""
    xx, yy, dx_, dy_ = _solve_displacement(vel, dt, 0.5, fp_tol, fp_maxiter, d_init)
    vals = _interp2d(f, xx - dx_, yy - dy_, kind, eps)
    return Field(f.grid, vals), (dx_, dy_)


def sl_step_leapfrog_2d(f_prev: Field, f_curr: Field, vel: VelocityField2D,
                        dt: float, kind: str, eps: float = WENO_EPS,
                        fp_tol: float = 1e-12, fp_maxiter: int = 25,
                        dt_prev: float | None = None, d_init=None):
    """Two-level characteristic step from t_{n-1} to t_{n+1}.

    The displacement over the whole span solves the midpoint fixed point
    d = span * A(t_n, x - theta d) with theta = dt/span, which reduces to
    d = 2 dt A(t_n, x - d/2) for equal steps; the new value interpolates
    f_prev at x - d.  Returns the stepped field and the displacement (useful
    as the next warm start).
    """
    span = dt + (dt if dt_prev is None else dt_prev)
    theta = dt / span
    xx, yy, dx_, dy_ = _solve_displacement(vel, span, theta, fp_tol, fp_maxiter, d_init)
    vals = _interp2d(f_prev, xx - dx_, yy - dy_, kind, eps)
    return Field(f_curr.grid, vals), (dx_, dy_)


# ---------------------------------------------------------------------------
# conservative finite-difference stepping

def fd_step_rk4_1d(f: Field, a, dt: float, recon: str, cfl_max: float = 1.0,
                   splitting: str = "upwind", eps: float | None = None) -> Field:
    """Classical four-stage RK4 for df/dt = -d(a f)/dx with fixed velocity."""
    grid = f.grid
    amax = float(np.max(np.abs(a)))
    if amax > 0.0 and dt > cfl_max * grid.dx / amax * (1.0 + 1e-9):
        raise CFLViolationError(
            f"dt={dt:.3e} exceeds {cfl_max} * dx/|a| = {cfl_max * grid.dx / amax:.3e}")

    def rhs(values: np.ndarray) -> np.ndarray:
        return divergence_1d(Field(grid, values), a, recon, splitting, eps).values

    v = f.values
    k1 = rhs(v)
    k2 = rhs(v + 0.5 * dt * k1)
    k3 = rhs(v + 0.5 * dt * k2)
    k4 = rhs(v + dt * k3)
    return Field(grid, v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def fd_step_rk4_2d(f: Field, velocity_of: Callable[[np.ndarray], tuple],
                   dt: float, recon: str, cfl_max: float = 1.0,
                   periodic: bool = False, eps: float | None = None) -> Field:
    """RK4 for df/dt = -div(A f); the velocity provider is re-evaluated on
    every stage value, so self-consistent fields stay fourth-order."""
    grid = f.grid
    dx, dy = grid.dx, grid.dy

    def rhs(values: np.ndarray) -> np.ndarray:
        ax, ay = velocity_of(values)
        return divergence_2d(values, ax, ay, dx, dy, recon, periodic, eps)

    ax0, ay0 = velocity_of(f.values)
    sx = float(np.max(np.abs(ax0)))
    sy = float(np.max(np.abs(ay0)))
    bound = min(dx / max(sx, 1e-300), dy / max(sy, 1e-300))
    if dt > cfl_max * bound * (1.0 + 1e-9):
        raise CFLViolationError(
            f"dt={dt:.3e} exceeds {cfl_max} * min(dx/|Ax|, dy/|Ay|) = {cfl_max * bound:.3e}")

    v = f.values
    k1 = divergence_2d(v, ax0, ay0, dx, dy, recon, periodic, eps)
    k2 = rhs(v + 0.5 * dt * k1)
    k3 = rhs(v + 0.5 * dt * k2)
    k4 = rhs(v + dt * k3)
    return Field(grid, v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


# ---------------------------------------------------------------------------
# mixed-method controller

PHASE_SL = "SL"
PHASE_FD = "FD"


@dataclass
class MixedState:
    """One-way phase state for the mixed method; the switch fires when the
    mass drift between consecutive accepted steps exceeds h^3."""

    threshold: float
    phase: str = PHASE_SL
    switch_time: float | None = field(default=None)


def mixed_controller(state: MixedState, f_prev: Field, f_curr: Field,
                     t: float | None = None) -> str:
    """Update the phase from the mass drift of two consecutive steps and
    return it.  Transitions are one-way: once FD, always FD."""
    if state.phase == PHASE_FD:
        return state.phase
    drift = abs(field_norms(f_curr).mass - field_norms(f_prev).mass)
    if drift > state.threshold:
        state.phase = PHASE_FD
        state.switch_time = t
    return state.phase
