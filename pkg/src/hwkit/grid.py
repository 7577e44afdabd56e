"""Uniform Cartesian grids, field storage, norms and snapshot I/O.

Node-centered grids: a periodic 1D grid of ``n`` nodes excludes ``x_max``
(spacing ``(x_max - x_min) / n``), a Dirichlet grid includes both endpoints
(spacing ``(x_max - x_min) / (n - 1)``).  2D grids are tensor products of the
same convention.  Disk geometries live on a square grid with a per-node mask.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from numba import njit

PERIODIC = "periodic"
DIRICHLET = "dirichlet"

# disk mask labels
EXTERIOR = 0
INTERIOR = 1
GHOST = 2

_SNAPSHOT_MAGIC = b"HWK1"


class ConfigurationError(ValueError):
    """Raised for geometrically or numerically inconsistent setup values."""


def _check_bc(bc: str) -> str:
    if bc not in (PERIODIC, DIRICHLET):
        raise ConfigurationError(f"unknown boundary kind: {bc!r}")
    return bc


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid; node i sits at ``x_min + i*dx``."""

    n: int
    x_min: float
    x_max: float
    bc: str = PERIODIC
    dx: float = field(init=False)

    def __post_init__(self) -> None:
        _check_bc(self.bc)
        if self.n < 8:
            raise ConfigurationError(f"need at least 8 nodes, got n={self.n}")
        if not self.x_max > self.x_min:
            raise ConfigurationError("x_max must exceed x_min")
        denom = self.n if self.bc == PERIODIC else self.n - 1
        object.__setattr__(self, "dx", (self.x_max - self.x_min) / denom)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def quad_weights(self) -> np.ndarray:
        """Quadrature weights: uniform for periodic, trapezoid for Dirichlet."""
        w = np.full(self.n, self.dx)
        if self.bc == DIRICHLET:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w


@dataclass(frozen=True)
class Grid2D:
    """Tensor-product 2D grid with a common boundary kind on both axes."""

    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    bc: str = DIRICHLET
    dx: float = field(init=False)
    dy: float = field(init=False)

    def __post_init__(self) -> None:
        _check_bc(self.bc)
        if self.nx < 8 or self.ny < 8:
            raise ConfigurationError("need at least 8 nodes per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ConfigurationError("upper bounds must exceed lower bounds")
        denx = self.nx if self.bc == PERIODIC else self.nx - 1
        deny = self.ny if self.bc == PERIODIC else self.ny - 1
        object.__setattr__(self, "dx", (self.x_max - self.x_min) / denx)
        object.__setattr__(self, "dy", (self.y_max - self.y_min) / deny)

    def x_nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    def y_nodes(self) -> np.ndarray:
        return self.y_min + self.dy * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_nodes(), self.y_nodes(), indexing="ij")

    def quad_weights(self) -> np.ndarray:
        wx = np.full(self.nx, self.dx)
        wy = np.full(self.ny, self.dy)
        if self.bc == DIRICHLET:
            wx[0] *= 0.5
            wx[-1] *= 0.5
            wy[0] *= 0.5
            wy[-1] *= 0.5
        return np.outer(wx, wy)


@dataclass
class Field:
    """Scalar samples on a grid; ``values`` has shape (n,) or (nx, ny)."""

    grid: Grid1D | Grid2D
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        expect = (self.grid.n,) if isinstance(self.grid, Grid1D) else (self.grid.nx, self.grid.ny)
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} does not match grid {expect}")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def check_finite(self) -> "Field":
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("field contains non-finite values")
        return self


def field_from_function(grid: Grid1D | Grid2D, fn) -> Field:
    if isinstance(grid, Grid1D):
        return Field(grid, fn(grid.nodes()))
    xx, yy = grid.meshgrid()
    return Field(grid, fn(xx, yy))


@dataclass(frozen=True)
class DiskMask:
    """Node classification of a square grid against the disk x^2 + y^2 <= R^2."""

    R: float
    labels: np.ndarray  # int8, values EXTERIOR / INTERIOR / GHOST
    n_interior: int
    n_ghost: int
    n_exterior: int


def classify_disk_nodes(grid: Grid2D, R: float) -> DiskMask:
    """Label nodes interior / ghost / exterior for the disk of radius R.

    A ghost is an exterior node with at least one interior node among its
    four axis neighbors (the 5-point stencil reach).
    """
    if R <= 0:
        raise ConfigurationError("disk radius must be positive")
    half_width = min(-grid.x_min, grid.x_max, -grid.y_min, grid.y_max)
    if R >= half_width:
        raise ConfigurationError(
            f"disk radius {R} does not fit inside the domain (half-width {half_width})"
        )
    xx, yy = grid.meshgrid()
    interior = xx**2 + yy**2 <= R * R
    labels = np.where(interior, INTERIOR, EXTERIOR).astype(np.int8)

    near = np.zeros_like(interior)
    near[1:, :] |= interior[:-1, :]
    near[:-1, :] |= interior[1:, :]
    near[:, 1:] |= interior[:, :-1]
    near[:, :-1] |= interior[:, 1:]
    ghost = near & ~interior
    labels[ghost] = GHOST

    n_int = int(np.count_nonzero(interior))
    n_gh = int(np.count_nonzero(ghost))
    return DiskMask(
        R=R,
        labels=labels,
        n_interior=n_int,
        n_ghost=n_gh,
        n_exterior=labels.size - n_int - n_gh,
    )


@njit(cache=True)
def _kahan_dot(values, weights):
    """Compensated inner product: deterministic left-to-right with carry."""
    total = 0.0
    carry = 0.0
    for i in range(values.size):
        term = values[i] * weights[i] - carry
        t = total + term
        carry = (t - total) - term
        total = t
    return total


def kahan_sum(values: np.ndarray, weights: np.ndarray | None = None) -> float:
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64).ravel()
    return float(_kahan_dot(v, w))


@dataclass(frozen=True)
class FieldNorms:
    mass: float
    l1: float
    l2: float
    tv: float
    vmin: float
    vmax: float


def field_norms(f: Field) -> FieldNorms:
    """Mass, L1, L2 (quadrature-weighted), total variation (1D), min/max.

    TV in 1D is the sum of absolute node-to-node jumps, with the wrap jump
    included on periodic grids.  For 2D fields TV is reported as NaN.
    """
    w = f.grid.quad_weights()
    v = f.values
    mass = kahan_sum(v, w)
    l1 = kahan_sum(np.abs(v), w)
    l2 = math.sqrt(max(kahan_sum(v * v, w), 0.0))
    if isinstance(f.grid, Grid1D):
        jumps = np.abs(np.diff(v))
        tv = float(np.sum(jumps))
        if f.grid.bc == PERIODIC:
            tv += abs(float(v[0]) - float(v[-1]))
    else:
        tv = math.nan
    return FieldNorms(mass=mass, l1=l1, l2=l2, tv=tv,
                      vmin=float(v.min()), vmax=float(v.max()))


def write_snapshot(path, f: Field) -> None:
    """Binary snapshot: magic ``HWK1``, dims, bounds (float64), row-major values."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_SNAPSHOT_MAGIC)
        if isinstance(g, Grid1D):
            fh.write(struct.pack("<q", 1))
            fh.write(struct.pack("<q", g.n))
            fh.write(struct.pack("<2d", g.x_min, g.x_max))
        else:
            fh.write(struct.pack("<q", 2))
            fh.write(struct.pack("<2q", g.nx, g.ny))
            fh.write(struct.pack("<4d", g.x_min, g.x_max, g.y_min, g.y_max))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path, bc: str = DIRICHLET) -> Field:
    """Read a snapshot back; the boundary kind is not stored and must be given."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SNAPSHOT_MAGIC:
            raise ValueError(f"not a snapshot file (magic {magic!r})")
        (ndim,) = struct.unpack("<q", fh.read(8))
        if ndim == 1:
            (n,) = struct.unpack("<q", fh.read(8))
            x_min, x_max = struct.unpack("<2d", fh.read(16))
            grid: Grid1D | Grid2D = Grid1D(n, x_min, x_max, bc=bc)
            values = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(n)
        elif ndim == 2:
            nx, ny = struct.unpack("<2q", fh.read(16))
            x_min, x_max, y_min, y_max = struct.unpack("<4d", fh.read(32))
            grid = Grid2D(nx, ny, x_min, x_max, y_min, y_max, bc=bc)
            values = np.frombuffer(fh.read(8 * nx * ny), dtype="<f8").reshape(nx, ny)
        else:
            raise ValueError(f"unsupported snapshot rank {ndim}")
    return Field(grid, values.copy())


def write_csv(path, f: Field) -> None:
    """Plain-text dump, one node per row: ``x[,y],value``."""
    g = f.grid
    with open(path, "w") as fh:
        if isinstance(g, Grid1D):
            fh.write("x,value\n")
            for x, v in zip(g.nodes(), f.values):
                fh.write(f"{x:.17g},{v:.17g}\n")
        else:
            fh.write("x,y,value\n")
            xs, ys = g.x_nodes(), g.y_nodes()
            for i in range(g.nx):
                for j in range(g.ny):
                    fh.write(f"{xs[i]:.17g},{ys[j]:.17g},{f.values[i, j]:.17g}\n")
