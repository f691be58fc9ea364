import math

import numpy as np
import pytest

from qflatlab import (KernelTable, NonIntegrableError, PotentialEvaluator,
                      QflatError, angular_log_kernel,
                      angular_log_kernel_quadrature,
                      field_from_expression, log_potential,
                      potential_asymptote, potential_bound_check, radial_field,
                      total_mass_alpha)
from qflatlab.fitting import fit_loglog


def indicator_density(scale=2.0):
    return radial_field(lambda r: np.where(np.asarray(r) <= 1.0, scale, 0.0), 2,
                        support_radius=1.0, name=f"{scale}*1_B1")


def sphere_density():
    return radial_field(lambda r: 4.0 / (1.0 + np.asarray(r) ** 2) ** 2, 2,
                        name="sphere-density")


class TestAngularKernel:
    def test_mean_value_property_n2(self):
        assert angular_log_kernel(2, 2.0, 1.0) == pytest.approx(math.log(2), abs=1e-15)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_s_zero(self, n):
        assert angular_log_kernel(n, 1.0, 0.0) == 0.0

    def test_n4_golden(self):
        # golden from a 10^6-sample spherical brute-force oracle; the closed
        # form log 2 + 1/16 agrees to the oracle's Monte Carlo resolution
        assert angular_log_kernel(4, 2.0, 1.0) == pytest.approx(0.7556471805599453,
                                                                abs=1e-12)

    def test_brute_force_oracle_n4(self):
        rng = np.random.default_rng(99)
        v = rng.normal(size=(1_000_000, 4))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        mc = float(np.mean(np.log(np.linalg.norm(
            np.array([2.0, 0, 0, 0]) - 1.0 * v, axis=1))))
        assert angular_log_kernel(4, 2.0, 1.0) == pytest.approx(mc, abs=2e-4)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_quadrature_cross_check(self, n):
        # off the diagonal, 64-node Gauss-Legendre agrees tightly
        for r, s in ((2.0, 1.0), (0.3, 0.9), (5.0, 0.2)):
            gl = angular_log_kernel_quadrature(n, r, s)
            assert angular_log_kernel(n, r, s) == pytest.approx(gl, abs=1e-10)

    def test_symmetry(self):
        r = np.geomspace(0.01, 100, 25)
        table = angular_log_kernel(4, r[:, None], r[None, :])
        assert np.max(np.abs(table - table.T)) <= 1e-10

    def test_origin_pair_rejected(self):
        with pytest.raises(QflatError):
            angular_log_kernel(2, 0.0, 0.0)


class TestKernelTable:
    def test_build_symmetric(self):
        t = KernelTable.build(2, r_min=0.1, r_max=10.0, per_decade=8)
        assert np.max(np.abs(t.values - t.values.T)) <= 1e-10

    def test_n2_is_log_max(self):
        t = KernelTable.build(2, r_min=0.5, r_max=2.0, per_decade=6)
        expected = np.log(np.maximum(t.r_nodes[:, None], t.r_nodes[None, :]))
        assert np.max(np.abs(t.values - expected)) <= 1e-10

    def test_save_load_roundtrip(self, tmp_path):
        t = KernelTable.build(4, r_min=0.1, r_max=10.0, per_decade=6)
        path = tmp_path / "kernel.bin"
        t.save(path)
        loaded = KernelTable.load(path)
        assert loaded.dim == 4
        assert np.array_equal(loaded.values, t.values)
        assert np.array_equal(loaded.r_nodes, t.r_nodes)

    def test_load_rejects_corrupt_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOTAKERNEL" + b"\x00" * 64)
        with pytest.raises(QflatError):
            KernelTable.load(path)

    def test_load_rejects_header_mismatch(self, tmp_path):
        t = KernelTable.build(2, r_min=0.1, r_max=10.0, per_decade=6)
        path = tmp_path / "kernel.bin"
        t.save(path)
        blob = path.read_bytes()
        # truncate the payload so the declared count disagrees
        path.write_bytes(blob[:-16])
        with pytest.raises(Exception):
            KernelTable.load(path)

    def test_evaluator_exposes_table(self):
        ev = PotentialEvaluator(indicator_density())
        t = ev.kernel_table(r_min=0.1, r_max=10.0, per_decade=4)
        assert t.dim == 2


class TestTotalMass:
    def test_zero(self):
        z = radial_field(lambda r: np.zeros_like(np.asarray(r, dtype=float)), 2,
                         support_radius=1.0, name="0")
        assert total_mass_alpha(z).alpha_hat == pytest.approx(0.0, abs=1e-14)

    def test_indicator(self):
        est = total_mass_alpha(indicator_density())
        assert est.alpha_hat == pytest.approx(1.0, rel=1e-10)
        assert est.method == "mass_integral"

    def test_sphere_density(self):
        assert total_mass_alpha(sphere_density()).alpha_hat == pytest.approx(2.0, rel=1e-8)

    def test_non_integrable(self):
        f = radial_field(lambda r: 1.0 / (1.0 + np.asarray(r) ** 2), 2, name="slow")
        with pytest.raises(NonIntegrableError):
            total_mass_alpha(f)


class TestLogPotential:
    def test_zero_density(self):
        z = radial_field(lambda r: np.zeros_like(np.asarray(r, dtype=float)), 2,
                         support_radius=1.0, name="0")
        assert log_potential(z, np.array([2.0, 1.0])) == 0.0

    def test_indicator_golden(self):
        ev = PotentialEvaluator(indicator_density())
        for r in (math.e, 10.0, 100.0):
            assert float(ev(np.array([r, 0.0]))) == pytest.approx(
                -0.5 - math.log(r), abs=1e-8)

    def test_value_at_origin_is_zero(self):
        ev = PotentialEvaluator(indicator_density())
        assert float(ev(np.zeros(2))) == 0.0

    def test_linearity(self):
        f = indicator_density()
        g = radial_field(lambda r: np.exp(-np.asarray(r) ** 2), 2, name="gauss")
        fg = radial_field(
            lambda r: np.where(np.asarray(r) <= 1.0, 2.0, 0.0) + np.exp(-np.asarray(r) ** 2),
            2, name="f+g")
        ev_f, ev_g, ev_fg = (PotentialEvaluator(h) for h in (f, g, fg))
        rng = np.random.default_rng(21)
        pts = rng.normal(size=(20, 2)) * rng.uniform(0.2, 20.0, size=(20, 1))
        for x in pts:
            lhs = float(ev_fg(x))
            rhs = float(ev_f(x)) + float(ev_g(x))
            assert lhs == pytest.approx(rhs, abs=2e-8)

    def test_general_path_matches_radial(self):
        fgen = field_from_expression("exp(-r^2) * (1 + 0*x1)", 2)
        assert not fgen.caps.is_radial
        frad = radial_field(lambda r: np.exp(-np.asarray(r) ** 2), 2, name="gauss")
        ev_gen = PotentialEvaluator(fgen, rel_tol=1e-7)
        ev_rad = PotentialEvaluator(frad)
        for x in (np.array([2.0, 1.0]), np.array([0.5, -0.2]), np.array([12.0, 5.0])):
            assert float(ev_gen(x)) == pytest.approx(float(ev_rad(x)), abs=5e-7)


class TestAsymptote:
    def test_zero_density_slope(self):
        z = radial_field(lambda r: np.zeros_like(np.asarray(r, dtype=float)), 2,
                         support_radius=1.0, name="0")
        est = potential_asymptote(z, np.geomspace(10, 1e4, 8))
        assert est.alpha_hat == pytest.approx(0.0, abs=1e-10)

    def test_indicator(self):
        est = potential_asymptote(indicator_density(), np.geomspace(10, 1e4, 10))
        assert est.alpha_hat == pytest.approx(1.0, abs=0.02)

    def test_sphere_density(self):
        est = potential_asymptote(sphere_density(), np.geomspace(10, 1e4, 10))
        assert est.alpha_hat == pytest.approx(2.0, abs=0.05)

    def test_methods_agree(self):
        # mass-integral and asymptote-fit estimates must agree on every
        # gallery-style density
        radii = np.geomspace(10, 1e4, 10)
        for f in (sphere_density(), indicator_density(),
                  radial_field(lambda r: 2.5 * np.exp(-np.asarray(r) ** 2), 2,
                               name="gauss")):
            a = total_mass_alpha(f).alpha_hat
            b = potential_asymptote(f, radii).alpha_hat
            assert abs(a - b) <= 0.05, f.name

    def test_window_precondition(self):
        with pytest.raises(QflatError):
            potential_asymptote(indicator_density(), np.geomspace(10, 90, 6))


class TestBoundCheck:
    def test_indicator_exact_constant(self):
        stats = potential_bound_check(indicator_density(), "plus",
                                      np.geomspace(2, 200, 10))
        assert stats.max == pytest.approx(-0.5, abs=1e-6)
        assert stats.min == pytest.approx(-0.5, abs=1e-6)

    def test_zero_density_margins(self):
        z = radial_field(lambda r: np.zeros_like(np.asarray(r, dtype=float)), 2,
                         support_radius=1.0, name="0")
        stats = potential_bound_check(z, "plus", np.geomspace(2, 100, 6))
        assert stats.max == 0.0 and stats.min == 0.0

    def test_gaussian_minus_bump_lower_margin(self):
        # f^- has compact support; the lower margin must stabilize
        def f(r):
            r = np.asarray(r, dtype=float)
            return np.exp(-r * r) - 2.0 * np.where(r <= 1.0, (1 - r * r) ** 2, 0.0)

        field = radial_field(f, 2, name="gauss-minus-bump")
        stats = potential_bound_check(field, "minus", np.geomspace(5, 500, 10),
                                      part_support_radius=1.0)
        assert math.isfinite(stats.min)
        assert abs(stats.drift) <= 0.05

    def test_precondition_enforced(self):
        g = radial_field(lambda r: np.exp(-np.asarray(r) ** 2), 2, name="gauss")
        with pytest.raises(QflatError):
            potential_bound_check(g, "plus", np.geomspace(2, 100, 6))


class TestGrowthLemmas:
    def test_absolute_potential_mass_slope(self):
        # int_{B_R} |L(f)| grows no faster than R^n (up to the log factor)
        ev = PotentialEvaluator(indicator_density())
        prof = ev.profile(r_max=1e6)
        from qflatlab.quadrature import integrate_radial
        radii = 2.0 ** np.arange(10, 41, 3)
        vals = []
        acc, prev = 0.0, 0.0
        for R in radii:
            acc += integrate_radial(
                lambda t: np.abs(prof(t)) * 2 * np.pi * np.asarray(t), prev, R,
                rel_tol=1e-7)
            prev = R
            vals.append(acc)
        top = len(radii) // 2
        slope = np.polyfit(np.log(radii[top:]), np.log(vals[top:]), 1)[0]
        assert slope <= 2.0 + 0.05

    def test_annulus_mean_exponent(self):
        # annulus means of e^{n L(f)} decay like R^{-n alpha}
        ev = PotentialEvaluator(indicator_density())  # alpha = 1
        prof = ev.profile(r_max=1e6)
        radii = 2.0 ** np.arange(4, 13)
        means = []
        for R in radii:
            from qflatlab.quadrature import integrate_radial
            num = integrate_radial(
                lambda t: np.exp(2.0 * prof(t)) * 2 * np.pi * np.asarray(t),
                R - 1.0, R + 1.0, rel_tol=1e-8)
            means.append(num / (math.pi * ((R + 1) ** 2 - (R - 1) ** 2)))
        fit = fit_loglog(radii, means)
        assert fit.exponent == pytest.approx(-2.0, abs=0.2)

    def test_potential_volume_growth_alpha_half(self):
        # V(e^{2 L(f)}) = (1 - alpha)+ with alpha = 1/2
        ev = PotentialEvaluator(indicator_density(1.0))  # alpha = 0.5
        assert ev.alpha == pytest.approx(0.5, rel=1e-9)
        prof = ev.profile(r_max=1e6)
        from qflatlab.quadrature import integrate_radial
        radii = np.geomspace(1e2, 1e6, 10)
        vols, acc, prev = [], 0.0, 0.0
        for R in radii:
            acc += integrate_radial(
                lambda t: np.exp(2.0 * prof(t)) * 2 * np.pi * np.asarray(t),
                prev, R, rel_tol=1e-7)
            prev = R
            vols.append(acc)
        fit = fit_loglog(radii, vols, abscissa=math.pi * radii ** 2)
        assert fit.exponent == pytest.approx(0.5, abs=0.05)
