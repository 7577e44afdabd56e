"""Problem definitions, initial data and experiment drivers.

Three experiment families:

* 1D free transport on [-1, 1] with periodic boundaries (smooth sine, step,
  and composite oscillatory profiles), the convergence workhorse;
* the simplified paraxial beam: a 2D phase-space transport problem whose
  velocity field couples back through a radial integral electric field;
* the guiding-center diocotron instability on a disk, advected by the
  perpendicular gradient of the self-consistent potential, with the one-way
  semi-Lagrangian to finite-difference switch.

Every driver emits one diagnostics record per accepted step and optional
field snapshots at configured times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from importlib import resources
from typing import Callable

import numpy as np
from scipy.special import erf

from .advect import (FD_SCHEMES, PHASE_FD, PHASE_SL, SL_SCHEMES, MixedState,
                     SchemeConfig, VelocityField2D, fd_step_rk4_1d,
                     fd_step_rk4_2d, sl_step_const_1d, sl_step_leapfrog_2d,
                     sl_step_midpoint_2d)
from .grid import (DIRICHLET, INTERIOR, PERIODIC, Field, Grid1D,
                   Grid2D, classify_disk_nodes, field_norms, kahan_sum,
                   write_snapshot)
from .fields import (DiskPoissonSolver, efield_radial, potential_energy,
                     velocity_from_potential)


# ---------------------------------------------------------------------------
# 1D transport profiles

def _profile_sine(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x)


def _profile_step(x: np.ndarray) -> np.ndarray:
    return np.where((x >= -1.0) & (x <= 0.0), 1.0, 0.0)


def _profile_composite(x: np.ndarray) -> np.ndarray:
    """Composite profile: smoothed Gaussian triple, box, hat, smoothed
    half-ellipse triple; zero elsewhere."""
    z = -0.7
    delta = 0.005
    alpha = 10.0
    a = 0.5
    beta = math.log(2.0) / (36.0 * delta * delta)

    def g(xx, center):
        return np.exp(-beta * (xx - center) ** 2)

    def fe(xx, center):
        return np.sqrt(np.maximum(1.0 - alpha * alpha * (xx - center) ** 2, 0.0))

    out = np.zeros_like(x)
    m = (x >= -0.8) & (x <= -0.6)
    out[m] = (g(x[m], z - delta) + g(x[m], z + delta) + 4.0 * g(x[m], z)) / 6.0
    m = (x >= -0.4) & (x <= -0.2)
    out[m] = 1.0
    m = (x >= 0.0) & (x <= 0.2)
    out[m] = 1.0 - np.abs(10.0 * (x[m] - 0.1))
    m = (x >= 0.4) & (x <= 0.6)
    out[m] = (fe(x[m], a - delta) + fe(x[m], a + delta) + 4.0 * fe(x[m], a)) / 6.0
    return out


_PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sine": _profile_sine,
    "step": _profile_step,
    "composite": _profile_composite,
}


def transport_profile(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return _PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown transport profile {name!r}") from None


@dataclass
class Transport1DSetup:
    """Free transport at unit speed on the periodic interval [-1, 1]."""

    profile: str = "sine"
    n: int = 200
    t_end: float = 8.0
    velocity: float = 1.0
    # use dt ~ dx^(5/4) for FD runs so the RK4 error stays below the
    # fifth-order spatial error in convergence studies
    fd_dt_subordinate: bool = False

    def __post_init__(self) -> None:
        transport_profile(self.profile)

    def grid(self) -> Grid1D:
        return Grid1D(self.n, -1.0, 1.0, bc=PERIODIC)

    def initial_field(self) -> Field:
        g = self.grid()
        return Field(g, transport_profile(self.profile)(g.nodes()))

    def exact_values(self, t: float) -> np.ndarray:
        g = self.grid()
        x = g.nodes() - self.velocity * t
        x = np.mod(x + 1.0, 2.0) - 1.0
        return transport_profile(self.profile)(x)


# ---------------------------------------------------------------------------
# paraxial beam

@dataclass
class BeamSetup:
    """Axisymmetric beam in (r, v) phase space on [-4, 4]^2: transport at
    (v/eps, E(r) - r/eps) with E the radial integral of the charge density."""

    n: int = 513
    eps: float = 0.7
    alpha: float = 0.2
    half_width: float = 4.0
    t_end: float = 20.0
    dt: float | None = 1.0 / 800.0

    def grid(self) -> Grid2D:
        L = self.half_width
        return Grid2D(self.n, self.n, -L, L, -L, L, bc=DIRICHLET)

    def initial_field(self) -> Field:
        g = self.grid()
        r, v = g.meshgrid()
        chi = 0.5 * erf((r + 1.2) / 0.3) - 0.5 * erf((r - 1.2) / 0.3)
        f0 = (4.0 / math.sqrt(2.0 * math.pi * self.alpha)) * chi \
            * np.exp(-v**2 / (2.0 * self.alpha))
        return Field(g, f0)


def rhs_beam(setup: BeamSetup, values: np.ndarray,
             grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Advection velocity (v/eps, E(r) - r/eps) on the (r, v) grid; the
    density is the trapezoid integral of f over v and E its radial field."""
    r = grid.x_nodes()
    v = grid.y_nodes()
    wv = np.full(grid.ny, grid.dy)
    wv[0] *= 0.5
    wv[-1] *= 0.5
    rho = values @ wv
    efield = efield_radial(r, rho)
    ax = np.broadcast_to(v / setup.eps, (grid.nx, grid.ny)).copy()
    ay = np.broadcast_to(((efield - r / setup.eps))[:, None], (grid.nx, grid.ny)).copy()
    return ax, ay


def kinetic_energy(values: np.ndarray, grid: Grid2D) -> float:
    v = grid.y_nodes()
    w = grid.quad_weights()
    return kahan_sum(values * (0.5 * v * v)[None, :], w)


# ---------------------------------------------------------------------------
# guiding-center diocotron

@dataclass
class DiocotronSetup:
    """Annular electron layer inside a disk, seeded with an azimuthal mode."""

    n: int = 256
    R: float = 10.0
    half_width: float = 11.0
    eps: float = 0.001
    r_minus: float = 5.0
    r_plus: float = 8.0
    ell: int = 7
    t_end: float = 60.0

    def grid(self) -> Grid2D:
        L = self.half_width
        return Grid2D(self.n, self.n, -L, L, -L, L, bc=DIRICHLET)

    def initial_field(self) -> Field:
        g = self.grid()
        x, y = g.meshgrid()
        r = np.hypot(x, y)
        theta = np.arctan2(y, x)
        rho = (1.0 + self.eps * np.cos(self.ell * theta)) * np.exp(-4.0 * (r - 6.5) ** 2)
        rho[(r < self.r_minus) | (r > self.r_plus)] = 0.0
        return Field(g, rho)


def mode_amplitude(values: np.ndarray, grid: Grid2D, ell: int) -> float:
    """Magnitude of the azimuthal Fourier moment of the density."""
    x, y = grid.meshgrid()
    theta = np.arctan2(y, x)
    w = grid.dx * grid.dy
    c = np.sum(values * np.exp(-1j * ell * theta)) * w
    return float(abs(c))


# ---------------------------------------------------------------------------
# diagnostics

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    l1: float
    l2: float
    tv: float
    energy: float
    vmin: float
    vmax: float
    rel_mass: float
    rel_l1: float
    rel_l2: float
    rel_energy: float
    mode_amp: float = math.nan


def _record(t: float, f: Field, energy: float, base: DiagnosticsRecord | None,
            mode_amp: float = math.nan) -> DiagnosticsRecord:
    n = field_norms(f)

    def rel(value, ref):
        if base is None:
            return 0.0
        return (value - ref) / ref if ref != 0.0 else value - ref

    return DiagnosticsRecord(
        t=t, mass=n.mass, l1=n.l1, l2=n.l2, tv=n.tv, energy=energy,
        vmin=n.vmin, vmax=n.vmax,
        rel_mass=rel(n.mass, base.mass) if base else 0.0,
        rel_l1=rel(n.l1, base.l1) if base else 0.0,
        rel_l2=rel(n.l2, base.l2) if base else 0.0,
        rel_energy=rel(energy, base.energy) if base else 0.0,
        mode_amp=mode_amp,
    )


TIMESERIES_HEADER = ("t,mass,l1,l2,tv,energy,min,max,"
                     "rel_mass,rel_l1,rel_l2,rel_energy,mode_amp")


def write_timeseries(path, records: list[DiagnosticsRecord]) -> None:
    with open(path, "w") as fh:
        fh.write(TIMESERIES_HEADER + "\n")
        for r in records:
            fh.write(f"{r.t:.17g},{r.mass:.17g},{r.l1:.17g},{r.l2:.17g},"
                     f"{r.tv:.17g},{r.energy:.17g},{r.vmin:.17g},{r.vmax:.17g},"
                     f"{r.rel_mass:.17g},{r.rel_l1:.17g},{r.rel_l2:.17g},"
                     f"{r.rel_energy:.17g},{r.mode_amp:.17g}\n")


def read_timeseries(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


@dataclass
class RunResult:
    scheme: str
    records: list[DiagnosticsRecord]
    final: Field
    snapshots: dict[float, Field] = dfield(default_factory=dict)
    switch_time: float | None = None

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


# ---------------------------------------------------------------------------
# experiment drivers

def _next_stop(t: float, t_end: float, events: list[float]) -> float:
    upcoming = [e for e in events if e > t + 1e-12]
    return min(upcoming + [t_end])


def _maybe_snapshot(result: RunResult, t: float, f: Field, times) -> None:
    for ts in times:
        if abs(t - ts) <= 1e-9 and ts not in result.snapshots:
            result.snapshots[ts] = f.copy()


def run_transport1d(setup: Transport1DSetup, config: SchemeConfig,
                    hook=None) -> RunResult:
    if config.scheme == "mixed":
        raise ValueError("the mixed scheme is specific to the guiding-center runs")
    grid = setup.grid()
    f = setup.initial_field()
    a = setup.velocity
    is_sl = config.scheme in SL_SCHEMES

    if is_sl:
        dt0 = config.cfl_linear * grid.dx / abs(a)
    elif setup.fd_dt_subordinate:
        dt0 = config.cfl_nonlinear * grid.dx ** 1.25 / abs(a)
    else:
        dt0 = config.cfl_nonlinear * grid.dx / abs(a)

    result = RunResult(config.scheme, [], f)
    base = _record(0.0, f, 0.0, None)
    result.records.append(base)
    if hook:
        hook(base)

    t = 0.0
    while t < setup.t_end - 1e-12:
        dt = min(dt0, setup.t_end - t)
        if is_sl:
            f = sl_step_const_1d(f, a, dt, config.sl_interp, config.eps)
        else:
            f = fd_step_rk4_1d(f, a, dt, config.fd_recon,
                               cfl_max=config.cfl_nonlinear,
                               splitting=config.splitting,
                               eps=config.eps_for(config.fd_recon))
        t += dt
        rec = _record(t, f, 0.0, base)
        result.records.append(rec)
        if hook:
            hook(rec)
    f.check_finite()
    result.final = f
    return result


def transport_errors(setup: Transport1DSetup, result: RunResult) -> dict[str, float]:
    """L1 error against the exact translated profile and the TV error."""
    grid = setup.grid()
    exact = setup.exact_values(setup.t_end)
    err = result.final.values - exact
    l1 = grid.dx * float(np.sum(np.abs(err)))
    tv0 = field_norms(Field(grid, setup.exact_values(0.0))).tv
    tvT = field_norms(result.final).tv
    return {"l1": l1, "tv_error": abs(tvT - tv0)}


def run_beam(setup: BeamSetup, config: SchemeConfig, hook=None,
             snapshot_times=(10.0, 15.0, 20.0)) -> RunResult:
    if config.scheme == "mixed":
        raise ValueError("the mixed scheme is specific to the guiding-center runs")
    grid = setup.grid()
    f = setup.initial_field()

    def velocity_of(values: np.ndarray):
        return rhs_beam(setup, values, grid)

    is_sl = config.scheme in SL_SCHEMES
    if setup.dt is not None:
        dt0 = setup.dt
    else:
        vel0 = VelocityField2D(grid, *velocity_of(f.values))
        dt0 = vel0.cfl_dt(config.cfl_linear if is_sl else config.cfl_nonlinear)

    result = RunResult(config.scheme, [], f)
    base = _record(0.0, f, kinetic_energy(f.values, grid), None)
    result.records.append(base)
    if hook:
        hook(base)
    _maybe_snapshot(result, 0.0, f, snapshot_times)

    events = sorted(set(snapshot_times))
    t = 0.0
    f_prev: Field | None = None
    dt_prev: float | None = None
    d_warm = None
    while t < setup.t_end - 1e-12:
        stop = _next_stop(t, setup.t_end, events)
        dt = min(dt0, stop - t)
        if is_sl:
            vel = VelocityField2D(grid, *velocity_of(f.values))
            if f_prev is None:
                f_new, d_warm = sl_step_midpoint_2d(
                    f, vel, dt, config.sl_interp, config.eps,
                    config.fp_tol, config.fp_maxiter)
            else:
                f_new, d_warm = sl_step_leapfrog_2d(
                    f_prev, f, vel, dt, config.sl_interp, config.eps,
                    config.fp_tol, config.fp_maxiter,
                    dt_prev=dt_prev, d_init=d_warm)
            f_prev, f = f, f_new
        else:
            f = fd_step_rk4_2d(f, velocity_of, dt, config.fd_recon,
                               cfl_max=config.cfl_nonlinear, periodic=False,
                               eps=config.eps_for(config.fd_recon))
        dt_prev = dt
        t += dt
        rec = _record(t, f, kinetic_energy(f.values, grid), base)
        result.records.append(rec)
        if hook:
            hook(rec)
        _maybe_snapshot(result, t, f, snapshot_times)
    f.check_finite()
    result.final = f
    return result


def run_diocotron(setup: DiocotronSetup, config: SchemeConfig, hook=None,
                  snapshot_times=(40.0, 50.0, 60.0)) -> RunResult:
    grid = setup.grid()
    mask = classify_disk_nodes(grid, setup.R)
    solver = DiskPoissonSolver(grid, setup.R, mask)
    inside = mask.labels == INTERIOR

    f = setup.initial_field()
    f.values[~inside] = 0.0

    phi_cache: dict[str, np.ndarray] = {}

    def velocity_of(values: np.ndarray):
        phi = solver.solve(values)
        phi_cache["phi"] = phi
        return velocity_from_potential(phi, grid, mask)

    is_mixed = config.scheme == "mixed"
    is_sl = config.scheme in SL_SCHEMES or is_mixed
    h = min(grid.dx, grid.dy)
    state = MixedState(threshold=h**3)
    if config.scheme in FD_SCHEMES:
        state.phase = PHASE_FD
        state.switch_time = 0.0

    def fd_recon() -> str:
        return "hweno5" if is_mixed else config.fd_recon

    result = RunResult(config.scheme, [], f)
    ux, uy = velocity_of(f.values)
    energy0 = potential_energy(phi_cache["phi"], grid, mask)
    base = _record(0.0, f, energy0, None,
                   mode_amplitude(f.values, grid, setup.ell))
    result.records.append(base)
    if hook:
        hook(base)
    _maybe_snapshot(result, 0.0, f, snapshot_times)

    events = sorted(set(snapshot_times))
    t = 0.0
    f_prev: Field | None = None
    dt_prev: float | None = None
    d_warm = None
    mass_prev = base.mass
    while t < setup.t_end - 1e-12:
        vel = VelocityField2D(grid, ux, uy)
        cfl = config.cfl_linear if state.phase == PHASE_SL else config.cfl_nonlinear
        stop = _next_stop(t, setup.t_end, events)
        dt = min(vel.cfl_dt(cfl), stop - t)

        use_sl = is_sl and (state.phase == PHASE_SL or not is_mixed)
        if use_sl:
            if f_prev is None:
                f_new, d_warm = sl_step_midpoint_2d(
                    f, vel, dt, config.sl_interp, config.eps,
                    config.fp_tol, config.fp_maxiter)
            else:
                f_new, d_warm = sl_step_leapfrog_2d(
                    f_prev, f, vel, dt, config.sl_interp, config.eps,
                    config.fp_tol, config.fp_maxiter,
                    dt_prev=dt_prev, d_init=d_warm)
            f_prev, f = f, f_new
        else:
            f = fd_step_rk4_2d(f, velocity_of, dt, fd_recon(),
                               cfl_max=config.cfl_nonlinear, periodic=False,
                               eps=config.eps_for(fd_recon()))
            f_prev = None
            d_warm = None
        f.values[~inside] = 0.0
        dt_prev = dt
        t += dt

        # velocity and potential of the accepted state (also next step's field)
        ux, uy = velocity_of(f.values)
        energy = potential_energy(phi_cache["phi"], grid, mask)
        rec = _record(t, f, energy, base, mode_amplitude(f.values, grid, setup.ell))
        result.records.append(rec)
        if hook:
            hook(rec)
        _maybe_snapshot(result, t, f, snapshot_times)

        if config.mixed_switch and state.phase == PHASE_SL:
            if abs(rec.mass - mass_prev) > state.threshold:
                state.phase = PHASE_FD
                state.switch_time = t
        mass_prev = rec.mass
    f.check_finite()
    result.final = f
    result.switch_time = state.switch_time
    return result


def run_experiment(setup, config: SchemeConfig, hook=None,
                   snapshot_times=None) -> RunResult:
    """Dispatch on the setup type; see the per-experiment drivers."""
    if isinstance(setup, Transport1DSetup):
        return run_transport1d(setup, config, hook)
    if isinstance(setup, BeamSetup):
        if snapshot_times is None:
            snapshot_times = (10.0, 15.0, 20.0)
        return run_beam(setup, config, hook, snapshot_times)
    if isinstance(setup, DiocotronSetup):
        if snapshot_times is None:
            snapshot_times = (40.0, 50.0, 60.0)
        return run_diocotron(setup, config, hook, snapshot_times)
    raise TypeError(f"unknown setup type {type(setup).__name__}")


def save_run(result: RunResult, out_dir, tag: str) -> None:
    """Write the time series and snapshots of a run under ``out_dir``."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    write_timeseries(os.path.join(out_dir, f"{tag}_timeseries.csv"), result.records)
    for ts, snap in sorted(result.snapshots.items()):
        write_snapshot(os.path.join(out_dir, f"{tag}_t{ts:g}.hwk"), snap)


# ---------------------------------------------------------------------------
# beam kinetic-energy reference

def beam_reference_resource():
    return resources.files("hwkit").joinpath("data/beam_energy_reference.csv")


def load_beam_energy_reference() -> tuple[np.ndarray, np.ndarray]:
    """Reference kinetic-energy curve (very fine FD-WENO5 run), shipped as
    package data."""
    res = beam_reference_resource()
    with resources.as_file(res) as path:
        data = np.genfromtxt(path, delimiter=",", names=True)
    return np.atleast_1d(data["t"]), np.atleast_1d(data["energy"])


def generate_beam_energy_reference(path, n: int = 1025, dt: float = 1.0 / 1600.0,
                                   t_end: float = 20.0, progress=None) -> None:
    """Regenerate the reference curve: FD-WENO5 at the stated resolution."""
    setup = BeamSetup(n=n, dt=dt, t_end=t_end)
    config = SchemeConfig(scheme="fd-weno5")
    rows: list[tuple[float, float]] = []

    def hook(rec: DiagnosticsRecord) -> None:
        rows.append((rec.t, rec.energy))
        if progress and len(rows) % 500 == 0:
            progress(rec.t)

    run_beam(setup, config, hook=hook, snapshot_times=())
    with open(path, "w") as fh:
        fh.write("t,energy\n")
        for t, e in rows:
            fh.write(f"{t:.17g},{e:.17g}\n")
