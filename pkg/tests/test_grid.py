import math

import numpy as np
import pytest

from hwkit.grid import (DIRICHLET, EXTERIOR, GHOST, INTERIOR, PERIODIC,
                        ConfigurationError, Field, Grid1D, Grid2D,
                        classify_disk_nodes, field_norms, kahan_sum,
                        read_snapshot, write_csv, write_snapshot)


class TestGrid1D:
    def test_periodic_spacing_excludes_right_endpoint(self):
        g = Grid1D(200, -1.0, 1.0, bc=PERIODIC)
        assert g.dx == pytest.approx(0.01)
        x = g.nodes()
        assert x[0] == -1.0
        assert x[-1] == pytest.approx(1.0 - g.dx)

    def test_dirichlet_spacing_includes_both_endpoints(self):
        g = Grid1D(513, -4.0, 4.0, bc=DIRICHLET)
        assert g.dx == pytest.approx(8.0 / 512.0)
        x = g.nodes()
        assert x[0] == -4.0 and x[-1] == 4.0

    def test_nodes_bit_reproducible(self):
        g = Grid1D(401, -4.0, 4.0, bc=DIRICHLET)
        assert np.array_equal(g.nodes(), g.nodes())

    def test_minimum_size_enforced(self):
        with pytest.raises(ConfigurationError):
            Grid1D(7, 0.0, 1.0)

    def test_bad_bounds_rejected(self):
        with pytest.raises(ConfigurationError):
            Grid1D(16, 1.0, -1.0)

    def test_unknown_bc_rejected(self):
        with pytest.raises(ConfigurationError):
            Grid1D(16, 0.0, 1.0, bc="reflecting")


class TestDiskClassification:
    def test_disk_larger_than_domain_is_configuration_error(self):
        g = Grid2D(16, 16, -1.0, 1.0, -1.0, 1.0)
        with pytest.raises(ConfigurationError):
            classify_disk_nodes(g, 1.5)

    def test_all_covered_nodes_interior(self):
        # disk well inside the domain: every node within R is interior
        g = Grid2D(9, 9, -2.0, 2.0, -2.0, 2.0)
        mask = classify_disk_nodes(g, 1.5)
        xx, yy = g.meshgrid()
        covered = xx**2 + yy**2 <= 1.5**2
        assert np.all(mask.labels[covered] == INTERIOR)
        assert np.all(mask.labels[~covered] != INTERIOR)

    def test_far_exterior_node_is_not_ghost(self):
        g = Grid2D(9, 9, -2.0, 2.0, -2.0, 2.0)
        mask = classify_disk_nodes(g, 1.0)
        # corner node (2, 2) has no interior neighbor
        assert mask.labels[-1, -1] == EXTERIOR

    def test_counts_match_brute_force(self):
        g = Grid2D(64, 64, -10.0, 10.0, -10.0, 10.0)
        R = 9.0
        mask = classify_disk_nodes(g, R)
        xs, ys = g.x_nodes(), g.y_nodes()
        n_int = n_ghost = 0
        inside = lambda i, j: xs[i] ** 2 + ys[j] ** 2 <= R * R
        for i in range(64):
            for j in range(64):
                if inside(i, j):
                    n_int += 1
                    continue
                nb = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                if any(0 <= a < 64 and 0 <= b < 64 and inside(a, b) for a, b in nb):
                    n_ghost += 1
        assert mask.n_interior == n_int
        assert mask.n_ghost == n_ghost
        assert mask.n_exterior == 64 * 64 - n_int - n_ghost

    def test_idempotent_and_deterministic(self):
        g = Grid2D(32, 32, -10.0, 10.0, -10.0, 10.0)
        a = classify_disk_nodes(g, 9.0)
        b = classify_disk_nodes(g, 9.0)
        assert np.array_equal(a.labels, b.labels)


class TestFieldNorms:
    def test_constant_field_periodic(self):
        g = Grid1D(200, -1.0, 1.0, bc=PERIODIC)
        n = field_norms(Field(g, np.ones(200)))
        assert n.mass == pytest.approx(2.0, abs=1e-14)
        assert n.tv == 0.0
        assert n.l2 == pytest.approx(math.sqrt(2.0), rel=1e-14)

    def test_step_tv_periodic_closure(self):
        g = Grid1D(200, -1.0, 1.0, bc=PERIODIC)
        x = g.nodes()
        f = Field(g, np.where((x >= -1.0) & (x <= 0.0), 1.0, 0.0))
        assert field_norms(f).tv == pytest.approx(2.0)

    def test_sine_mass_vanishes(self):
        # analytic antiderivative -cos(pi x)/pi is periodic: integral is 0
        g = Grid1D(400, -1.0, 1.0, bc=PERIODIC)
        f = Field(g, np.sin(np.pi * g.nodes()))
        assert abs(field_norms(f).mass) < 1e-13

    @pytest.mark.parametrize("alpha", [2.0, -3.5, 0.25])
    def test_scaling(self, alpha):
        rng = np.random.default_rng(7)
        g = Grid1D(128, -1.0, 1.0, bc=PERIODIC)
        v = rng.normal(size=128)
        n1 = field_norms(Field(g, v))
        n2 = field_norms(Field(g, alpha * v))
        assert n2.mass == pytest.approx(alpha * n1.mass, rel=1e-12, abs=1e-13)
        assert n2.l2 == pytest.approx(abs(alpha) * n1.l2, rel=1e-12)
        assert n2.tv == pytest.approx(abs(alpha) * n1.tv, rel=1e-12)

    def test_2d_mass_trapezoid(self):
        g = Grid2D(33, 33, 0.0, 1.0, 0.0, 1.0, bc=DIRICHLET)
        n = field_norms(Field(g, np.ones((33, 33))))
        assert n.mass == pytest.approx(1.0, rel=1e-13)
        assert math.isnan(n.tv)

    def test_kahan_sum_matches_fsum(self):
        rng = np.random.default_rng(3)
        v = rng.normal(size=10001) * 10.0 ** rng.integers(-8, 8, size=10001)
        assert kahan_sum(v) == pytest.approx(math.fsum(v), rel=1e-15, abs=1e-12)


class TestFieldValidation:
    def test_shape_mismatch_rejected(self):
        g = Grid1D(16, 0.0, 1.0)
        with pytest.raises(ValueError):
            Field(g, np.zeros(17))

    def test_check_finite(self):
        g = Grid1D(16, 0.0, 1.0)
        f = Field(g, np.zeros(16))
        f.values[3] = np.inf
        with pytest.raises(FloatingPointError):
            f.check_finite()


class TestSnapshotIO:
    def test_roundtrip_1d(self, tmp_path):
        g = Grid1D(64, -1.0, 1.0, bc=PERIODIC)
        f = Field(g, np.sin(np.pi * g.nodes()))
        p = tmp_path / "f.hwk"
        write_snapshot(p, f)
        back = read_snapshot(p, bc=PERIODIC)
        assert back.grid == g
        assert np.array_equal(back.values, f.values)

    def test_roundtrip_2d(self, tmp_path):
        g = Grid2D(16, 12, -2.0, 2.0, 0.0, 3.0)
        rng = np.random.default_rng(0)
        f = Field(g, rng.normal(size=(16, 12)))
        p = tmp_path / "f2.hwk"
        write_snapshot(p, f)
        back = read_snapshot(p)
        assert back.grid == g
        assert np.array_equal(back.values, f.values)

    def test_magic_checked(self, tmp_path):
        p = tmp_path / "junk.hwk"
        p.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(ValueError):
            read_snapshot(p)

    def test_csv_writer(self, tmp_path):
        g = Grid1D(8, 0.0, 1.0, bc=DIRICHLET)
        f = Field(g, np.arange(8.0))
        p = tmp_path / "f.csv"
        write_csv(p, f)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "x,value"
        assert len(lines) == 9
        x0, v0 = lines[1].split(",")
        assert float(x0) == 0.0 and float(v0) == 0.0
