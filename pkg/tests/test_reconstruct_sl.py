import math

import numpy as np
import pytest

from hwkit.grid import DIRICHLET, PERIODIC, Field, Grid1D
from hwkit.reconstruct_sl import (HermiteCell3, HermiteCell5,
                                  SplineInterpolant1D, eval_derivative4,
                                  eval_derivative6, hweno3_weights,
                                  hweno5_weights, interp2d_scattered,
                                  interp_cubic_spline, interp_hermite3,
                                  interp_hermite5, interp_hweno3,
                                  interp_hweno5, shift_periodic)

# ---------------------------------------------------------------------------
# oracles


def hermite3_oracle(f0, f1, d0, d1, dx, x):
    """Cubic Hermite polynomial evaluated directly from its Newton-type form."""
    t0, t1 = 0.0, dx
    a = f0
    b = (f1 - f0) / dx
    c = ((f1 - f0) - dx * d0) / dx**2
    d = (dx * (d0 + d1) - 2.0 * (f1 - f0)) / dx**3
    return a + b * (x - t0) + c * (x - t0) * (x - t1) + d * (x - t0) ** 2 * (x - t1)


def hermite5_oracle(values, d_m, d_p, dx, x):
    """Unique quintic through 4 values and 2 outer derivatives by a 6x6 solve."""
    nodes = np.array([-1.0, 0.0, 1.0, 2.0]) * dx
    A = np.zeros((6, 6))
    rhs = np.zeros(6)
    for r, (xn, v) in enumerate(zip(nodes, values)):
        A[r] = [xn**k for k in range(6)]
        rhs[r] = v
    for r, (xn, v) in enumerate(((nodes[0], d_m), (nodes[3], d_p)), start=4):
        A[r] = [k * xn ** (k - 1) if k >= 1 else 0.0 for k in range(6)]
        rhs[r] = v
    coef = np.linalg.solve(A, rhs)
    return sum(c * x**k for k, c in enumerate(coef))


# ---------------------------------------------------------------------------
# derivative estimates


class TestDerivatives:
    def test_d4_constant(self):
        assert eval_derivative4(np.full(5, 2.5), 0.1) == 0.0

    def test_d4_quartic_symmetry(self):
        x = 0.1 * np.arange(-2, 3)
        assert eval_derivative4(x**4, 0.1) == pytest.approx(0.0, abs=1e-15)

    def test_d4_sine_fourth_order(self):
        dx = 0.05
        x = 0.3 + dx * np.arange(-2, 3)
        err = abs(eval_derivative4(np.sin(x), dx) - math.cos(0.3))
        assert err < dx**4  # truncation constant |f^(5)|/30 < 1

    def test_d6_linear(self):
        dx = 0.2
        x = 1.0 + dx * np.arange(-3, 4)
        assert eval_derivative6(3.0 - 2.0 * x, dx) == pytest.approx(-2.0, rel=1e-13)

    def test_d6_x6_symmetry(self):
        x = 0.1 * np.arange(-3, 4)
        assert eval_derivative6(x**6, 0.1) == pytest.approx(0.0, abs=1e-15)

    def test_d6_exp_sixth_order(self):
        dx = 0.1
        x = dx * np.arange(-3, 4)
        err = abs(eval_derivative6(np.exp(x), dx) - 1.0)
        assert err < 1e-7 and err > 0.0

    def test_window_length_enforced(self):
        with pytest.raises(ValueError):
            eval_derivative4(np.zeros(6), 0.1)
        with pytest.raises(ValueError):
            eval_derivative6(np.zeros(5), 0.1)


# ---------------------------------------------------------------------------
# HWENO3


class TestHweno3:
    def test_constant_reproduction(self):
        cell = HermiteCell3(4.0, 4.0, 0.0, 0.0, 0.5)
        for x in (0.0, 0.1, 0.25, 0.5):
            assert interp_hweno3(cell, x) == pytest.approx(4.0, rel=1e-15)

    def test_smooth_case_matches_cubic_hermite(self):
        # antisymmetric cubic about the cell midpoint makes both smoothness
        # indicators equal, so the weights sit at their linear values
        dx = 0.2
        poly = lambda t: (t - dx / 2.0) ** 3
        dpoly = lambda t: 3.0 * (t - dx / 2.0) ** 2
        cell = HermiteCell3(poly(0.0), poly(dx), dpoly(0.0), dpoly(dx), dx)
        w = hweno3_weights(cell, 0.3 * dx)
        assert w.beta[0] == pytest.approx(w.beta[1], rel=1e-13)
        for x in (0.05 * dx, 0.3 * dx, 0.77 * dx):
            expect = hermite3_oracle(cell.f_i, cell.f_ip1, cell.fp_i,
                                     cell.fp_ip1, dx, x)
            assert interp_hweno3(cell, x) == pytest.approx(expect, rel=1e-12, abs=1e-15)

    def test_hermite3_identity_on_random_cubics(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            dx = float(rng.uniform(0.05, 2.0))
            f0, f1, d0, d1 = rng.normal(size=4)
            cell = HermiteCell3(f0, f1, d0, d1, dx)
            x = float(rng.uniform(0.0, dx))
            expect = hermite3_oracle(f0, f1, d0, d1, dx, x)
            scale = max(1.0, abs(expect))
            assert abs(interp_hermite3(cell, x) - expect) <= 20 * np.finfo(float).eps * scale

    def test_beta_hand_values(self):
        # f_i=0, f_{i+1}=1, fp_i=1/dx, fp_{i+1}=0
        dx = 0.37
        cell = HermiteCell3(0.0, 1.0, 1.0 / dx, 0.0, dx)
        w = hweno3_weights(cell, 0.5 * dx)
        assert w.beta[0] == pytest.approx(1.0, rel=1e-14)
        assert w.beta[1] == pytest.approx(16.0 / 3.0, rel=1e-14)
        eps = 1e-6
        al = 0.5 / (eps + 1.0) ** 2
        ar = 0.5 / (eps + 16.0 / 3.0) ** 2
        assert w.w[0] == pytest.approx(al / (al + ar), rel=1e-13)

    def test_endpoint_interpolation_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            f0, f1, d0, d1 = rng.normal(size=4)
            cell = HermiteCell3(f0, f1, d0, d1, 0.3)
            assert interp_hweno3(cell, 0.0) == f0
            assert interp_hweno3(cell, 0.3) == f1

    def test_outside_cell_rejected(self):
        cell = HermiteCell3(0.0, 1.0, 0.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            interp_hweno3(cell, 0.7)


# ---------------------------------------------------------------------------
# HWENO5


class TestHweno5:
    def test_constant_reproduction(self):
        cell = HermiteCell5(2.0, 2.0, 2.0, 2.0, 0.0, 0.0, 0.1)
        for x in (0.0, 0.03, 0.1):
            assert interp_hweno5(cell, x) == pytest.approx(2.0, rel=1e-15)

    def test_smooth_limit_matches_quintic_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            dx = float(rng.uniform(0.05, 1.5))
            coefs = rng.normal(size=6)
            poly = np.polynomial.Polynomial(coefs)
            dpoly = poly.deriv()
            nodes = np.array([-1.0, 0.0, 1.0, 2.0]) * dx
            vals = poly(nodes)
            cell = HermiteCell5(*vals, dpoly(nodes[0]), dpoly(nodes[3]), dx)
            x = float(rng.uniform(0.0, dx))
            expect = hermite5_oracle(vals, dpoly(nodes[0]), dpoly(nodes[3]), dx, x)
            got = interp_hermite5(cell, x)
            assert got == pytest.approx(expect, rel=1e-12, abs=1e-13)
            # the quintic reproduces the generating polynomial itself
            assert got == pytest.approx(poly(x), rel=1e-10, abs=1e-12)

    def test_endpoint_interpolation_exact(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            v = rng.normal(size=6)
            cell = HermiteCell5(v[0], v[1], v[2], v[3], v[4], v[5], 0.25)
            assert interp_hweno5(cell, 0.0) == v[1]
            assert interp_hweno5(cell, 0.25) == v[2]

    def test_weights_normalized_nonnegative(self):
        rng = np.random.default_rng(9)
        for _ in range(500):
            v = rng.normal(size=6) * 10.0 ** rng.integers(-3, 3)
            cell = HermiteCell5(v[0], v[1], v[2], v[3], v[4], v[5], 0.2)
            w = hweno5_weights(cell, float(rng.uniform(0.0, 0.2)))
            assert sum(w.w) == pytest.approx(1.0, abs=1e-15)
            assert all(wk >= 0.0 for wk in w.w)
            assert all(bk >= -1e-12 for bk in w.beta)


# ---------------------------------------------------------------------------
# ENO behavior on step data


class TestEnoProperty:
    def test_hweno3_downweights_jump_stencil(self):
        # jump between x_{i-2} and x_{i-1}: pollutes only the left derivative
        dx = 0.01
        f = np.array([0.0, 1.0, 1.0, 1.0, 1.0, 1.0])  # f_{i-2}..f_{i+3}
        d0 = eval_derivative4(f[0:5], dx) * dx
        d1 = eval_derivative4(f[1:6], dx) * dx
        cell = HermiteCell3(f[2], f[3], d0 / dx, d1 / dx, dx)
        w = hweno3_weights(cell, 0.5 * dx)
        assert w.w[0] <= 1e-4 * w.w[1]

    def test_hweno5_downweights_jump_stencil(self):
        # jump between x_{i+3} and x_{i+4}: pollutes only the right
        # derivative estimate, hence only the right sub-stencil
        dx = 0.01
        w10 = np.zeros(10)      # f_{i-4}..f_{i+5}
        w10[8:] = 1.0
        gm = ((w10[6] - w10[0]) - 9 * (w10[5] - w10[1]) + 45 * (w10[4] - w10[2])) / 60.0
        gp = ((w10[9] - w10[3]) - 9 * (w10[8] - w10[4]) + 45 * (w10[7] - w10[5])) / 60.0
        cell = HermiteCell5(w10[3], w10[4], w10[5], w10[6],
                            gm / dx, gp / dx, dx)
        w = hweno5_weights(cell, 0.5 * dx)
        assert w.w[2] <= 1e-4 * max(w.w)


# ---------------------------------------------------------------------------
# cubic spline


class TestCubicSpline:
    def test_reproduces_cubics(self):
        g = Grid1D(32, -1.0, 1.0, bc=DIRICHLET)
        x = g.nodes()
        f = Field(g, 1.0 + x - 2.0 * x**2 + 0.5 * x**3)
        pts = np.linspace(-1.0, 1.0, 97)
        expect = 1.0 + pts - 2.0 * pts**2 + 0.5 * pts**3
        assert np.max(np.abs(interp_cubic_spline(f, pts) - expect)) < 1e-12

    def test_periodic_sine_fourth_order(self):
        g = Grid1D(200, -1.0, 1.0, bc=PERIODIC)
        f = Field(g, np.sin(np.pi * g.nodes()))
        pts = np.linspace(-1.0, 1.0, 1001)
        err = np.max(np.abs(interp_cubic_spline(f, pts) - np.sin(np.pi * pts)))
        assert err < 5.0 * g.dx**4  # analytic oracle, O(dx^4)

    def test_interpolates_nodes(self):
        rng = np.random.default_rng(4)
        g = Grid1D(24, 0.0, 3.0, bc=DIRICHLET)
        f = Field(g, rng.normal(size=24))
        got = interp_cubic_spline(f, g.nodes())
        assert np.max(np.abs(got - f.values)) < 1e-13

    def test_periodic_wraps(self):
        g = Grid1D(64, -1.0, 1.0, bc=PERIODIC)
        f = Field(g, np.cos(np.pi * g.nodes()))
        s = SplineInterpolant1D(f)
        assert s(1.3) == pytest.approx(s(-0.7), rel=1e-12)

    def test_outside_domain_rejected_nonperiodic(self):
        g = Grid1D(16, 0.0, 1.0, bc=DIRICHLET)
        s = SplineInterpolant1D(Field(g, np.zeros(16)))
        with pytest.raises(ValueError):
            s(1.5)


# ---------------------------------------------------------------------------
# uniform-shift and scattered evaluation paths


class TestShiftPeriodic:
    @pytest.mark.parametrize("kind", ["hweno3", "hweno5"])
    def test_integer_shift_exact(self, kind):
        rng = np.random.default_rng(8)
        f = rng.normal(size=64)
        got = shift_periodic(f, 5.0, kind)
        assert np.array_equal(got, np.roll(f, 5))

    @pytest.mark.parametrize("kind", ["hweno3", "hweno5"])
    def test_fractional_shift_accuracy(self, kind):
        n = 256
        g = Grid1D(n, -1.0, 1.0, bc=PERIODIC)
        x = g.nodes()
        f = np.sin(np.pi * x)
        got = shift_periodic(f, 2.5, kind)
        expect = np.sin(np.pi * (x - 2.5 * g.dx))
        tol = g.dx**4 if kind == "hweno3" else g.dx**5
        assert np.max(np.abs(got - expect)) < 10 * tol

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            shift_periodic(np.zeros(16), 0.5, "quintic")


class TestScattered2D:
    def test_on_grid_points_exact(self):
        rng = np.random.default_rng(12)
        f = rng.normal(size=(24, 20))
        ii, jj = np.meshgrid(np.arange(8, 16), np.arange(6, 14), indexing="ij")
        got = interp2d_scattered(f, ii.astype(float), jj.astype(float), "hweno5")
        assert np.array_equal(got, f[ii, jj].ravel())

    def test_outside_domain_zero(self):
        f = np.ones((16, 16))
        got = interp2d_scattered(f, np.array([-5.0, 30.0]), np.array([4.0, 4.0]),
                                 "hweno5")
        assert np.array_equal(got, np.zeros(2))

    @pytest.mark.parametrize("kind,order", [("hweno3", 4), ("hweno5", 6)])
    def test_smooth_2d_accuracy(self, kind, order):
        errs = []
        for n in (32, 64):
            h = 2.0 / (n - 1)
            x = -1.0 + h * np.arange(n)
            xx, yy = np.meshgrid(x, x, indexing="ij")
            f = np.exp(-2.0 * (xx**2 + yy**2))
            m = np.arange(10, n - 12)
            px, py = np.meshgrid(m + 0.37, m + 0.61, indexing="ij")
            got = interp2d_scattered(f, px.astype(float), py.astype(float), kind)
            xe = -1.0 + h * px
            ye = -1.0 + h * py
            expect = np.exp(-2.0 * (xe**2 + ye**2)).ravel()
            errs.append(np.max(np.abs(got - expect)))
        rate = math.log2(errs[0] / errs[1])
        assert rate > order - 1.2
