"""Self-consistent field solvers.

* radial integral electric field for the paraxial beam model,
* five-point Poisson solver on a disk embedded in a Cartesian grid, with
  ghost values extrapolated along the inward normal (quadratic in the normal
  coordinate, tensor-quadratic interpolation of the two interior samples,
  falling back to lower degree where the geometry is too tight),
* velocity assembly U = (-d(phi)/dy, d(phi)/dx).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import (EXTERIOR, GHOST, INTERIOR, ConfigurationError, DiskMask,
                   Field, Grid2D, classify_disk_nodes)


# ---------------------------------------------------------------------------
# paraxial radial field

def efield_radial(r: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """E(r) = (1/r) * integral_0^r s rho(s) ds by cumulative trapezoid.

    The coordinate may be signed; the integral is anchored at r = 0 and the
    removable singularity there evaluates to 0.
    """
    r = np.asarray(r, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    w = r * rho
    cum = np.empty_like(r)
    cum[0] = 0.0
    np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(r), out=cum[1:])
    c0 = np.interp(0.0, r, cum)
    num = cum - c0
    out = np.zeros_like(r)
    nz = np.abs(r) > 1e-14 * max(abs(r[0]), abs(r[-1]))
    out[nz] = num[nz] / r[nz]
    return out


# ---------------------------------------------------------------------------
# ghost extrapolation along the inward normal

@dataclass(frozen=True)
class GhostRule:
    """Extrapolation recipe for one ghost node.

    ghost value = w_boundary * phi(x_p) + sum_k weights[k] * phi[nodes[k]],
    with x_p the foot of the inward normal on the circle.  ``degree`` is the
    tensor degree of the interior interpolation actually used (2, 1 or 0).
    """

    ij: tuple[int, int]
    x_p: tuple[float, float]
    w_boundary: float
    nodes: np.ndarray      # (m, 2) interior node indices
    weights: np.ndarray    # (m,)
    degree: int


def _lagrange_weights(nodes: np.ndarray, t: float) -> np.ndarray:
    """1D Lagrange weights at t for 2 or 3 distinct nodes."""
    m = nodes.size
    w = np.empty(m)
    for a in range(m):
        num = 1.0
        den = 1.0
        for b in range(m):
            if b != a:
                num *= t - nodes[b]
                den *= nodes[a] - nodes[b]
        w[a] = num / den
    return w


class _DiskRows:
    """Contiguous interior index span of every grid line of the disk."""

    def __init__(self, mask: np.ndarray):
        self.x_span = self._spans(mask)            # per j: (ilo, ihi) along x
        self.y_span = self._spans(mask.T)          # per i: (jlo, jhi) along y

    @staticmethod
    def _spans(m: np.ndarray) -> list[tuple[int, int] | None]:
        spans: list[tuple[int, int] | None] = []
        for k in range(m.shape[1]):
            idx = np.nonzero(m[:, k] == INTERIOR)[0]
            spans.append((int(idx[0]), int(idx[-1])) if idx.size else None)
        return spans


def _nearest_interior(mask: np.ndarray, i0: int, j0: int) -> tuple[int, int] | None:
    nx, ny = mask.shape
    for rad in range(1, 8):
        best = None
        best_d = None
        for i in range(max(0, i0 - rad), min(nx, i0 + rad + 1)):
            for j in range(max(0, j0 - rad), min(ny, j0 + rad + 1)):
                if mask[i, j] == INTERIOR:
                    d = (i - i0) ** 2 + (j - j0) ** 2
                    if best_d is None or d < best_d:
                        best, best_d = (i, j), d
        if best is not None:
            return best
    return None


def build_ghost_extrapolation(grid: Grid2D, mask: DiskMask) -> list[GhostRule]:
    """Build the normal-direction extrapolation rule of every ghost node.

    For each ghost: the boundary foot x_p on the circle, two interior samples
    x_h, x_2h equally spaced on the inward normal with h = min(dx, dy), and
    quadratic Lagrange weights in the normal coordinate.  The samples are read
    from a tensor-quadratic interpolation over three grid lines crossed by the
    normal (three nearest interior nodes per line); where that stencil does
    not exist, degree one (two lines, two nodes each) then degree zero
    (nearest interior node) are used instead.
    """
    labels = mask.labels
    R = mask.R
    xs, ys = grid.x_nodes(), grid.y_nodes()
    dx, dy = grid.dx, grid.dy
    h = min(dx, dy)
    rows = _DiskRows(labels)
    rules: list[GhostRule] = []

    def line_interp(dominant_y: bool, targets, foot, gi, gj, nvec, npts):
        """Tensor interpolation of the targets (list of (x, y)) from ``npts``
        nodes on ``npts`` grid lines crossed by the inward normal; returns
        per-target (nodes, weights) or None when the stencil does not fit."""
        xg, yg = xs[gi], ys[gj]
        nx_, ny_ = nvec
        if dominant_y:
            # horizontal lines y = ys[l], starting strictly inward of the foot
            sgn = 1 if ny_ > 0 else -1
            jf = (foot[1] - grid.y_min) / dy
            j0 = int(math.floor(jf)) + 1 if sgn > 0 else int(math.ceil(jf)) - 1
            lines = [j0 + sgn * k for k in range(npts)]
            if any(l < 0 or l >= grid.ny for l in lines):
                return None
            per_line = []
            for l in lines:
                span = rows.x_span[l]
                if span is None or span[1] - span[0] + 1 < npts:
                    return None
                t = (ys[l] - yg) / ny_
                xc = xg + nx_ * t
                inear = int(round((xc - grid.x_min) / dx))
                lo = min(max(inear - (npts - 1) // 2, span[0]), span[1] - npts + 1)
                per_line.append((l, lo))
            out = []
            for (xt, yt) in targets:
                nodes = []
                weights = []
                wy = _lagrange_weights(ys[np.array(lines)], yt)
                for (l, lo), wyl in zip(per_line, wy):
                    cols = np.arange(lo, lo + npts)
                    wx = _lagrange_weights(xs[cols], xt)
                    for c, wxc in zip(cols, wx):
                        nodes.append((int(c), int(l)))
                        weights.append(wyl * wxc)
                out.append((np.array(nodes, dtype=np.int64), np.array(weights)))
            return out
        # vertical lines x = xs[l]
        sgn = 1 if nx_ > 0 else -1
        jf = (foot[0] - grid.x_min) / dx
        i0 = int(math.floor(jf)) + 1 if sgn > 0 else int(math.ceil(jf)) - 1
        lines = [i0 + sgn * k for k in range(npts)]
        if any(l < 0 or l >= grid.nx for l in lines):
            return None
        per_line = []
        for l in lines:
            span = rows.y_span[l]
            if span is None or span[1] - span[0] + 1 < npts:
                return None
            t = (xs[l] - xg) / nx_
            yc = yg + ny_ * t
            jnear = int(round((yc - grid.y_min) / dy))
            lo = min(max(jnear - (npts - 1) // 2, span[0]), span[1] - npts + 1)
            per_line.append((l, lo))
        out = []
        for (xt, yt) in targets:
            nodes = []
            weights = []
            wx = _lagrange_weights(xs[np.array(lines)], xt)
            for (l, lo), wxl in zip(per_line, wx):
                colidx = np.arange(lo, lo + npts)
                wy = _lagrange_weights(ys[colidx], yt)
                for c, wyc in zip(colidx, wy):
                    nodes.append((int(l), int(c)))
                    weights.append(wxl * wyc)
            out.append((np.array(nodes, dtype=np.int64), np.array(weights)))
        return out

    gi_list, gj_list = np.nonzero(labels == GHOST)
    for gi, gj in zip(gi_list, gj_list):
        xg, yg = xs[gi], ys[gj]
        rlen = math.hypot(xg, yg)
        if rlen == 0.0:
            raise ConfigurationError("ghost node at the origin")
        nvec = (-xg / rlen, -yg / rlen)             # inward normal
        xp = (R * xg / rlen, R * yg / rlen)
        # samples on the normal, measured inward from x_p
        t1 = (xp[0] + h * nvec[0], xp[1] + h * nvec[1])
        t2 = (xp[0] + 2.0 * h * nvec[0], xp[1] + 2.0 * h * nvec[1])
        s_g = -(rlen - R)
        wp = (s_g - h) * (s_g - 2.0 * h) / (2.0 * h * h)
        wh = -s_g * (s_g - 2.0 * h) / (h * h)
        w2h = s_g * (s_g - h) / (2.0 * h * h)

        dominant_y = abs(nvec[1]) >= abs(nvec[0])
        degree = 2
        got = line_interp(dominant_y, [t1, t2], xp, gi, gj, nvec, 3)
        if got is None:
            degree = 1
            got = line_interp(dominant_y, [t1, t2], xp, gi, gj, nvec, 2)
        if got is None:
            degree = 0
            near = _nearest_interior(labels, gi, gj)
            if near is None:
                raise ConfigurationError(
                    f"no interior node reachable from ghost {(gi, gj)}; grid too coarse")
            got = [(np.array([near], dtype=np.int64), np.array([1.0]))] * 2

        (n1, w1), (n2, w2) = got
        combo: dict[tuple[int, int], float] = {}
        for nodes, ws, scale in ((n1, w1, wh), (n2, w2, w2h)):
            for (ni, nj), wv in zip(nodes, ws):
                key = (int(ni), int(nj))
                combo[key] = combo.get(key, 0.0) + scale * float(wv)
        keys = sorted(combo)
        rules.append(GhostRule(
            ij=(int(gi), int(gj)),
            x_p=xp,
            w_boundary=float(wp),
            nodes=np.array(keys, dtype=np.int64),
            weights=np.array([combo[k] for k in keys]),
            degree=degree,
        ))
    return rules


def apply_ghost_rule(rule: GhostRule, values: np.ndarray,
                     boundary_value: float = 0.0) -> float:
    inner = float(np.sum(rule.weights * values[rule.nodes[:, 0], rule.nodes[:, 1]]))
    return rule.w_boundary * boundary_value + inner


# ---------------------------------------------------------------------------
# Poisson solver on the disk

class DiskPoissonSolver:
    """-Laplace(phi) = rho on the disk with phi = 0 on the circle, using the
    five-point stencil over interior nodes and ghost elimination through the
    normal extrapolation rules.  The sparse factorization is reused across
    solves (the geometry is fixed)."""

    def __init__(self, grid: Grid2D, R: float, mask: DiskMask | None = None):
        self.grid = grid
        self.mask = mask if mask is not None else classify_disk_nodes(grid, R)
        if self.mask.R != R:
            raise ConfigurationError("mask radius does not match R")
        self.R = R
        self.rules = build_ghost_extrapolation(grid, self.mask)
        self._rule_at = {rule.ij: rule for rule in self.rules}

        labels = self.mask.labels
        self.interior = np.argwhere(labels == INTERIOR)
        self.index = -np.ones(labels.shape, dtype=np.int64)
        for k, (i, j) in enumerate(self.interior):
            self.index[i, j] = k
        self._assemble()

    def _assemble(self) -> None:
        g = self.grid
        cx = 1.0 / g.dx**2
        cy = 1.0 / g.dy**2
        labels = self.mask.labels
        m = len(self.interior)
        rows_ = []
        cols = []
        vals = []
        bweight = np.zeros(m)   # coefficient of the boundary value per row

        def add(r, c, v):
            rows_.append(r)
            cols.append(c)
            vals.append(v)

        for k, (i, j) in enumerate(self.interior):
            add(k, k, 2.0 * cx + 2.0 * cy)
            for (ni, nj, coef) in ((i - 1, j, cx), (i + 1, j, cx),
                                   (i, j - 1, cy), (i, j + 1, cy)):
                lab = labels[ni, nj]
                if lab == INTERIOR:
                    add(k, self.index[ni, nj], -coef)
                elif lab == GHOST:
                    rule = self._rule_at[(ni, nj)]
                    for (ri, rj), w in zip(rule.nodes, rule.weights):
                        add(k, self.index[ri, rj], -coef * w)
                    bweight[k] += coef * rule.w_boundary
                else:  # pragma: no cover - impossible for interior neighbors
                    raise ConfigurationError("interior node touches a bare exterior node")

        self.matrix = sp.csr_matrix((vals, (rows_, cols)), shape=(m, m))
        self._boundary_coef = bweight
        self._lu = splu(self.matrix.tocsc())

    def solve(self, rho, boundary_value: float = 0.0) -> np.ndarray:
        """Solve for phi; returns the full-grid array with extrapolated ghost
        values filled in and zeros outside."""
        rho_arr = rho.values if isinstance(rho, Field) else np.asarray(rho)
        rhs = rho_arr[self.interior[:, 0], self.interior[:, 1]].astype(np.float64)
        if boundary_value != 0.0:
            rhs = rhs + self._boundary_coef * boundary_value
        sol = self._lu.solve(rhs)
        res = self.matrix @ sol - rhs
        rhs_norm = float(np.linalg.norm(rhs))
        if float(np.linalg.norm(res)) > 1e-10 * max(rhs_norm, 1e-300):
            raise RuntimeError(
                f"Poisson solve residual {np.linalg.norm(res):.3e} "
                f"exceeds 1e-10 * ||rhs|| = {1e-10 * rhs_norm:.3e}")
        phi = np.zeros(self.mask.labels.shape)
        phi[self.interior[:, 0], self.interior[:, 1]] = sol
        for rule in self.rules:
            phi[rule.ij] = apply_ghost_rule(rule, phi, boundary_value)
        return phi

    def dump_system(self, path) -> None:
        """Write the assembled matrix in (row, col, value) text format."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {coo.shape[0]} x {coo.shape[1]}, nnz={coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v:.17g}\n")


def velocity_from_potential(phi: np.ndarray, grid: Grid2D,
                            mask: DiskMask) -> tuple[np.ndarray, np.ndarray]:
    """U = (-d(phi)/dy, d(phi)/dx) on interior nodes: fourth-order centered
    where the wide stencil stays inside, second-order centered (reaching into
    the extrapolated ghost layer) near the boundary, zero outside."""
    labels = mask.labels
    interior = labels == INTERIOR
    filled = interior | (labels == GHOST)

    def axis_deriv(axis: int, d: float) -> np.ndarray:
        p1 = np.roll(phi, -1, axis=axis)
        m1 = np.roll(phi, 1, axis=axis)
        p2 = np.roll(phi, -2, axis=axis)
        m2 = np.roll(phi, 2, axis=axis)
        ok1 = np.roll(filled, -1, axis=axis) & np.roll(filled, 1, axis=axis)
        deep = (np.roll(interior, -1, axis=axis) & np.roll(interior, 1, axis=axis)
                & np.roll(interior, -2, axis=axis) & np.roll(interior, 2, axis=axis))
        second = (p1 - m1) / (2.0 * d)
        fourth = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * d)
        out = np.where(deep, fourth, np.where(ok1, second, 0.0))
        return np.where(interior, out, 0.0)

    dphi_dx = axis_deriv(0, grid.dx)
    dphi_dy = axis_deriv(1, grid.dy)
    return -dphi_dy, dphi_dx


def potential_energy(phi: np.ndarray, grid: Grid2D, mask: DiskMask) -> float:
    """Integral of |grad phi|^2 over the disk interior."""
    ux, uy = velocity_from_potential(phi, grid, mask)
    dens = ux * ux + uy * uy
    return float(np.sum(dens[mask.labels == INTERIOR]) * grid.dx * grid.dy)
