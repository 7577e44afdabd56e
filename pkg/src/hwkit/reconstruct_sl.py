"""Point-value interpolation kernels for semi-Lagrangian updates.

Three interpolants:

* cubic spline (global, C2), the classical baseline;
* third-order Hermite-WENO on one cell ``[x_i, x_{i+1}]`` blending the two
  quadratics that carry the left/right endpoint derivative;
* fifth-order Hermite-WENO on four points plus outer derivatives, blending
  three sub-cubics with position-dependent linear weights.

Endpoint derivatives are estimated by centered finite differences of order
four (HWENO3) and six (HWENO5) unless injected explicitly.  All kernels work
in the scaled cell coordinate ``xi = (x - x_i)/dx`` in [0, 1], where the
smoothness integrals lose every dx factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange
from scipy.interpolate import CubicSpline

from .grid import DIRICHLET, PERIODIC, Field, Grid1D

WENO_EPS = 1e-6


# ---------------------------------------------------------------------------
# derivative estimates

def eval_derivative4(values, dx: float) -> float:
    """Fourth-order centered first derivative from 5 consecutive values."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (5,):
        raise ValueError("need exactly 5 consecutive values")
    return float((8.0 * (v[3] - v[1]) - (v[4] - v[0])) / (12.0 * dx))


def eval_derivative6(values, dx: float) -> float:
    """Sixth-order centered first derivative from 7 consecutive values."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (7,):
        raise ValueError("need exactly 7 consecutive values")
    return float(((v[6] - v[0]) - 9.0 * (v[5] - v[1]) + 45.0 * (v[4] - v[2])) / (60.0 * dx))


def derivative4_periodic(f: np.ndarray, dx: float) -> np.ndarray:
    """Vectorized 4th-order derivative on a periodic array."""
    return (8.0 * (np.roll(f, -1) - np.roll(f, 1))
            - (np.roll(f, -2) - np.roll(f, 2))) / (12.0 * dx)


def derivative6_periodic(f: np.ndarray, dx: float) -> np.ndarray:
    """Vectorized 6th-order derivative on a periodic array."""
    return ((np.roll(f, -3) - np.roll(f, 3))
            - 9.0 * (np.roll(f, -2) - np.roll(f, 2))
            + 45.0 * (np.roll(f, -1) - np.roll(f, 1))) / (60.0 * dx)


# ---------------------------------------------------------------------------
# scalar cell kernels (numba cores shared by every evaluation path)

@njit(cache=True)
def _hweno3_core(f0, f1, d0, d1, xi, eps):
    """HWENO3 value and weights at xi in [0,1].

    d0, d1 are dx-scaled endpoint derivatives.  Returns
    (value, w_l, w_r, beta_l, beta_r).
    """
    df = f1 - f0
    bl = df * df + (13.0 / 3.0) * (df - d0) * (df - d0)
    br = df * df + (13.0 / 3.0) * (d1 - df) * (d1 - df)
    cl = 1.0 - xi
    cr = xi
    al = cl / ((eps + bl) * (eps + bl))
    ar = cr / ((eps + br) * (eps + br))
    wl = al / (al + ar)
    wr = 1.0 - wl
    corr = xi * (xi - 1.0)
    hl = f0 + df * xi + (df - d0) * corr
    hr = f0 + df * xi + (d1 - df) * corr
    if xi == 0.0:
        return f0, wl, wr, bl, br
    if xi == 1.0:
        return f1, wl, wr, bl, br
    return wl * hl + wr * hr, wl, wr, bl, br


@njit(cache=True)
def _cubic_smoothness(b, c, d):
    # int_0^1 (p')^2 + (p'')^2 + (p''')^2 dxi for p = a + b xi + c xi^2 + d xi^3
    return (b * b + 2.0 * b * c + 2.0 * b * d
            + (16.0 / 3.0) * c * c + 15.0 * c * d + (249.0 / 5.0) * d * d)


@njit(cache=True)
def _hweno5_core(fm1, f0, f1, f2, gm, gp, xi, eps):
    """HWENO5 value and weights at xi in [0,1].

    Stencil nodes sit at xi = -1, 0, 1, 2; gm, gp are dx-scaled derivatives
    at the outer nodes.  Returns (value, w_l, w_c, w_r, b_l, b_c, b_r).
    """
    s = 0.5 * (f1 - fm1)
    cc2 = 0.5 * (f1 + fm1) - f0
    dc = (f2 - 3.0 * f1 + 3.0 * f0 - fm1) / 6.0
    bc1 = s - dc

    dl = 0.5 * (gm + 2.0 * cc2 - s)
    bl1 = s - dl

    e1 = f1 - f0
    e2 = f2 - f0
    dr = 0.5 * (gp + 2.0 * e1 - 1.5 * e2)
    cr2 = 0.5 * (e2 - 2.0 * e1) - 3.0 * dr
    br1 = e1 - cr2 - dr

    beta_l = _cubic_smoothness(bl1, cc2, dl)
    beta_c = _cubic_smoothness(bc1, cc2, dc)
    beta_r = _cubic_smoothness(br1, cr2, dr)

    cl = (xi - 2.0) * (xi - 2.0) / 9.0
    cr = (xi + 1.0) * (xi + 1.0) / 9.0
    cc = 1.0 - cl - cr
    al = cl / ((eps + beta_l) * (eps + beta_l))
    ac = cc / ((eps + beta_c) * (eps + beta_c))
    ar = cr / ((eps + beta_r) * (eps + beta_r))
    asum = al + ac + ar
    wl = al / asum
    wc = ac / asum
    wr = 1.0 - wl - wc

    if xi == 0.0:
        return f0, wl, wc, wr, beta_l, beta_c, beta_r
    if xi == 1.0:
        return f1, wl, wc, wr, beta_l, beta_c, beta_r
    hl = f0 + xi * (bl1 + xi * (cc2 + xi * dl))
    hc = f0 + xi * (bc1 + xi * (cc2 + xi * dc))
    hr = f0 + xi * (br1 + xi * (cr2 + xi * dr))
    return wl * hl + wc * hc + wr * hr, wl, wc, wr, beta_l, beta_c, beta_r


# ---------------------------------------------------------------------------
# cell types and contract-level operations

@dataclass(frozen=True)
class HermiteCell3:
    """One cell [x_left, x_left+dx] with endpoint values and derivatives."""

    f_i: float
    f_ip1: float
    fp_i: float
    fp_ip1: float
    dx: float
    x_left: float = 0.0


@dataclass(frozen=True)
class HermiteCell5:
    """Four consecutive values around the cell [x_left, x_left+dx] plus the
    derivatives at the outermost nodes x_{i-1} and x_{i+2}."""

    f_im1: float
    f_i: float
    f_ip1: float
    f_ip2: float
    fp_im1: float
    fp_ip2: float
    dx: float
    x_left: float = 0.0


@dataclass(frozen=True)
class WenoWeights:
    """Per-sub-stencil linear weights, smoothness, regularized and normalized weights."""

    c: tuple
    beta: tuple
    alpha: tuple
    w: tuple


def _local_coord(x: float, x_left: float, dx: float) -> float:
    xi = (x - x_left) / dx
    if xi < -1e-12 or xi > 1.0 + 1e-12:
        raise ValueError(f"point x={x} outside the cell [{x_left}, {x_left + dx}]")
    return min(max(xi, 0.0), 1.0)


def interp_hweno3(cell: HermiteCell3, x: float, eps: float = WENO_EPS) -> float:
    xi = _local_coord(x, cell.x_left, cell.dx)
    val, _, _, _, _ = _hweno3_core(cell.f_i, cell.f_ip1,
                                   cell.dx * cell.fp_i, cell.dx * cell.fp_ip1, xi, eps)
    return float(val)


def hweno3_weights(cell: HermiteCell3, x: float, eps: float = WENO_EPS) -> WenoWeights:
    xi = _local_coord(x, cell.x_left, cell.dx)
    _, wl, wr, bl, br = _hweno3_core(cell.f_i, cell.f_ip1,
                                     cell.dx * cell.fp_i, cell.dx * cell.fp_ip1, xi, eps)
    cl, cr = 1.0 - xi, xi
    al = cl / (eps + bl) ** 2
    ar = cr / (eps + br) ** 2
    return WenoWeights(c=(cl, cr), beta=(bl, br), alpha=(al, ar), w=(float(wl), float(wr)))


def interp_hermite3(cell: HermiteCell3, x: float) -> float:
    """Smooth-limit value: the full cubic Hermite polynomial, equal to the
    candidate quadratics combined with the linear weights."""
    xi = _local_coord(x, cell.x_left, cell.dx)
    d0 = cell.dx * cell.fp_i
    d1 = cell.dx * cell.fp_ip1
    df = cell.f_ip1 - cell.f_i
    corr = xi * (xi - 1.0)
    hl = cell.f_i + df * xi + (df - d0) * corr
    hr = cell.f_i + df * xi + (d1 - df) * corr
    return float((1.0 - xi) * hl + xi * hr)


def interp_hermite5(cell: HermiteCell5, x: float) -> float:
    """Smooth-limit value: the quintic interpolating the four values and two
    outer derivatives, via the linear-weight combination of the sub-cubics."""
    xi = _local_coord(x, cell.x_left, cell.dx)
    gm = cell.dx * cell.fp_im1
    gp = cell.dx * cell.fp_ip2
    fm1, f0, f1, f2 = cell.f_im1, cell.f_i, cell.f_ip1, cell.f_ip2
    s = 0.5 * (f1 - fm1)
    c2 = 0.5 * (f1 + fm1) - f0
    dc = (f2 - 3.0 * f1 + 3.0 * f0 - fm1) / 6.0
    dl = 0.5 * (gm + 2.0 * c2 - s)
    e1, e2 = f1 - f0, f2 - f0
    dr = 0.5 * (gp + 2.0 * e1 - 1.5 * e2)
    cr2 = 0.5 * (e2 - 2.0 * e1) - 3.0 * dr
    hl = f0 + xi * ((s - dl) + xi * (c2 + xi * dl))
    hc = f0 + xi * ((s - dc) + xi * (c2 + xi * dc))
    hr = f0 + xi * ((e1 - cr2 - dr) + xi * (cr2 + xi * dr))
    cl = (xi - 2.0) ** 2 / 9.0
    cr = (xi + 1.0) ** 2 / 9.0
    return float(cl * hl + (1.0 - cl - cr) * hc + cr * hr)


def interp_hweno5(cell: HermiteCell5, x: float, eps: float = WENO_EPS) -> float:
    xi = _local_coord(x, cell.x_left, cell.dx)
    val, *_ = _hweno5_core(cell.f_im1, cell.f_i, cell.f_ip1, cell.f_ip2,
                           cell.dx * cell.fp_im1, cell.dx * cell.fp_ip2, xi, eps)
    return float(val)


def hweno5_weights(cell: HermiteCell5, x: float, eps: float = WENO_EPS) -> WenoWeights:
    xi = _local_coord(x, cell.x_left, cell.dx)
    _, wl, wc, wr, bl, bc, br = _hweno5_core(
        cell.f_im1, cell.f_i, cell.f_ip1, cell.f_ip2,
        cell.dx * cell.fp_im1, cell.dx * cell.fp_ip2, xi, eps)
    cl = (xi - 2.0) ** 2 / 9.0
    cr = (xi + 1.0) ** 2 / 9.0
    cc = 1.0 - cl - cr
    al, ac, ar = (cl / (eps + bl) ** 2, cc / (eps + bc) ** 2, cr / (eps + br) ** 2)
    return WenoWeights(c=(cl, cc, cr), beta=(bl, bc, br), alpha=(al, ac, ar),
                       w=(float(wl), float(wc), float(wr)))


# ---------------------------------------------------------------------------
# cubic spline baseline

class SplineInterpolant1D:
    """Global cubic spline over a 1D field: periodic end conditions on
    periodic grids, not-a-knot otherwise (reproduces cubics exactly)."""

    def __init__(self, f: Field):
        grid = f.grid
        if not isinstance(grid, Grid1D):
            raise TypeError("1D spline needs a 1D field")
        self.grid = grid
        if grid.bc == PERIODIC:
            x = np.append(grid.nodes(), grid.x_max)
            y = np.append(f.values, f.values[0])
            self._spline = CubicSpline(x, y, bc_type="periodic")
        else:
            self._spline = CubicSpline(grid.nodes(), f.values, bc_type="not-a-knot")

    def __call__(self, x):
        g = self.grid
        if g.bc == PERIODIC:
            x = np.mod(np.asarray(x) - g.x_min, g.length) + g.x_min
        else:
            xa = np.asarray(x)
            if np.any(xa < g.x_min - 1e-12) or np.any(xa > g.x_max + 1e-12):
                raise ValueError("evaluation point outside the non-periodic domain")
        return self._spline(x)


def interp_cubic_spline(f: Field, x):
    """Convenience one-shot spline evaluation (builds the spline each call)."""
    return SplineInterpolant1D(f)(x)


# ---------------------------------------------------------------------------
# uniform-shift periodic evaluation (1D constant-velocity transport)

@njit(cache=True)
def _shift_hweno3_periodic(f, m, xi, eps, out):
    n = f.size
    for i in range(n):
        j = (i - m) % n
        fm2 = f[(j - 2) % n]
        fm1 = f[(j - 1) % n]
        f0 = f[j]
        f1 = f[(j + 1) % n]
        f2 = f[(j + 2) % n]
        f3 = f[(j + 3) % n]
        d0 = (8.0 * (f1 - fm1) - (f2 - fm2)) / 12.0
        d1 = (8.0 * (f2 - f0) - (f3 - fm1)) / 12.0
        out[i], _, _, _, _ = _hweno3_core(f0, f1, d0, d1, xi, eps)


@njit(cache=True)
def _shift_hweno5_periodic(f, m, xi, eps, out):
    n = f.size
    w = np.empty(10)
    for i in range(n):
        j = (i - m) % n
        for k in range(10):
            w[k] = f[(j - 4 + k) % n]
        gm = ((w[6] - w[0]) - 9.0 * (w[5] - w[1]) + 45.0 * (w[4] - w[2])) / 60.0
        gp = ((w[9] - w[3]) - 9.0 * (w[8] - w[4]) + 45.0 * (w[7] - w[5])) / 60.0
        out[i], _, _, _, _, _, _ = _hweno5_core(w[3], w[4], w[5], w[6], gm, gp, xi, eps)


def shift_periodic(f: np.ndarray, shift_cells: float, kind: str,
                   eps: float = WENO_EPS) -> np.ndarray:
    """Evaluate a periodic field at every node displaced by ``shift_cells``
    grid cells (new[i] = old(x_i - shift_cells*dx)).  Integer shifts reduce
    to exact rolls for every interpolation kind."""
    n = f.size
    m = math.ceil(shift_cells)
    xi = float(m - shift_cells)
    if xi == 0.0 or xi == 1.0:
        # departure point is a node: exact circular shift
        k = m if xi == 0.0 else m - 1
        return np.roll(f, k % n) if k else f.copy()
    out = np.empty_like(f)
    if kind == "hweno3":
        _shift_hweno3_periodic(f, m, xi, eps, out)
    elif kind == "hweno5":
        _shift_hweno5_periodic(f, m, xi, eps, out)
    else:
        raise ValueError(f"unknown interpolation kind: {kind!r}")
    return out


# ---------------------------------------------------------------------------
# scattered 2D evaluation, dimension by dimension (zero fill outside)

@njit(cache=True, inline="always")
def _get2(f, i, j):
    if 0 <= i < f.shape[0] and 0 <= j < f.shape[1]:
        return f[i, j]
    return 0.0


@njit(cache=True)
def _hweno5_window(w, xi, eps):
    gm = ((w[6] - w[0]) - 9.0 * (w[5] - w[1]) + 45.0 * (w[4] - w[2])) / 60.0
    gp = ((w[9] - w[3]) - 9.0 * (w[8] - w[4]) + 45.0 * (w[7] - w[5])) / 60.0
    val, _, _, _, _, _, _ = _hweno5_core(w[3], w[4], w[5], w[6], gm, gp, xi, eps)
    return val


@njit(cache=True)
def _hweno3_window(w, xi, eps):
    # w holds f_{j-2}..f_{j+3}
    d0 = (8.0 * (w[3] - w[1]) - (w[4] - w[0])) / 12.0
    d1 = (8.0 * (w[4] - w[2]) - (w[5] - w[1])) / 12.0
    val, _, _, _, _ = _hweno3_core(w[2], w[3], d0, d1, xi, eps)
    return val


@njit(cache=True, parallel=True)
def _interp2d_hweno(f, px, py, order5, eps, out):
    """Dimension-by-dimension Hermite-WENO at scattered index coordinates.

    px, py are departure positions in index units; points outside the grid
    see zero-extended data (homogeneous Dirichlet closure).
    """
    nx, ny = f.shape
    half = 4 if order5 else 2
    width = 10 if order5 else 6
    for p in prange(px.size):
        x = px[p]
        y = py[p]
        if x <= -1.0 or x >= nx or y <= -1.0 or y >= ny:
            out[p] = 0.0
            continue
        ix = int(math.floor(x))
        iy = int(math.floor(y))
        xi = x - ix
        yi = y - iy
        rowvals = np.empty(width)
        wx = np.empty(width)
        for r in range(width):
            jy = iy - half + r
            for k in range(width):
                wx[k] = _get2(f, ix - half + k, jy)
            if order5:
                rowvals[r] = _hweno5_window(wx, xi, eps)
            else:
                rowvals[r] = _hweno3_window(wx, xi, eps)
        if order5:
            out[p] = _hweno5_window(rowvals, yi, eps)
        else:
            out[p] = _hweno3_window(rowvals, yi, eps)


def interp2d_scattered(f2d: np.ndarray, px: np.ndarray, py: np.ndarray,
                       kind: str, eps: float = WENO_EPS) -> np.ndarray:
    """Hermite-WENO interpolation of a 2D array at scattered points given in
    index coordinates (px = (x - x_min)/dx).  Returns a flat array."""
    if kind not in ("hweno3", "hweno5"):
        raise ValueError(f"unknown interpolation kind: {kind!r}")
    pxf = np.ascontiguousarray(px, dtype=np.float64).ravel()
    pyf = np.ascontiguousarray(py, dtype=np.float64).ravel()
    out = np.empty(pxf.size)
    _interp2d_hweno(np.ascontiguousarray(f2d), pxf, pyf, kind == "hweno5", eps, out)
    return out
