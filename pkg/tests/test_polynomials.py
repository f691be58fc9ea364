import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qflatlab import (Dimension, Polynomial, apply_laplacian_poly,
                      ball_mean_poly, monomials_upto, ph_dimension,
                      poly_partial, radial_monomial)


def poly(n, coeffs):
    return Polynomial(Dimension(n), coeffs)


class TestLaplacian:
    def test_x1_squared(self):
        p = apply_laplacian_poly(poly(2, {(2, 0): 1.0}))
        assert p.coeffs == {(0, 0): 2.0}

    def test_r4_in_n4(self):
        p = apply_laplacian_poly(radial_monomial(Dimension(4), 2))
        # Delta |x|^4 = (4n + 8)|x|^2 = 24 |x|^2 in n = 4
        expected = {tuple(2 if j == i else 0 for j in range(4)): 24.0 for i in range(4)}
        assert p.coeffs == expected

    def test_harmonic_monomial(self):
        assert apply_laplacian_poly(poly(2, {(1, 1): 3.0})).coeffs == {}

    def test_iterate_matches_power(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.choice([2, 4]))
            monos = monomials_upto(n, 4)
            pick = rng.choice(len(monos), size=5, replace=False)
            p = poly(n, {monos[i]: float(rng.integers(-5, 6)) for i in pick})
            twice = apply_laplacian_poly(apply_laplacian_poly(p, 1), 1)
            power = apply_laplacian_poly(p, 2)
            assert twice.coeffs == power.coeffs


@settings(max_examples=50, derandomize=True, deadline=None)
@given(st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)),
    st.integers(-4, 4), min_size=1, max_size=6))
def test_laplacian_composition_property(coeff_map):
    p = poly(2, {k: float(v) for k, v in coeff_map.items()})
    a = apply_laplacian_poly(apply_laplacian_poly(p, 1), 1)
    b = apply_laplacian_poly(p, 2)
    assert a.coeffs == b.coeffs


class TestShiftAndEval:
    def test_shift_matches_translation(self):
        rng = np.random.default_rng(7)
        p = poly(3 * 0 + 2, {(2, 1): 1.5, (0, 3): -0.5, (1, 0): 2.0})
        c = rng.normal(size=2)
        xs = rng.normal(size=(20, 2))
        assert np.allclose(p.shift(c)(xs), p(xs + c), atol=1e-12)

    def test_partial_derivative(self):
        p = poly(2, {(2, 1): 4.0})
        assert poly_partial(p, 0).coeffs == {(1, 1): 8.0}
        assert poly_partial(p, 1).coeffs == {(2, 0): 4.0}


class TestBallMeans:
    def test_constant(self):
        assert ball_mean_poly(poly(2, {(0, 0): 3.0}), [0, 0], 2.0) == pytest.approx(3.0)

    def test_r2_mean(self):
        p = radial_monomial(Dimension(2), 1)
        assert ball_mean_poly(p, [0, 0], 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_odd_vanishes(self):
        assert ball_mean_poly(poly(2, {(1, 0): 1.0}), [0, 0], 3.0) == 0.0

    def test_against_quadrature_oracle(self):
        # independent oracle: scipy dblquad over the disc B_R(c)
        p = poly(2, {(2, 1): 1.0, (0, 2): -0.7, (1, 0): 0.3})
        c = np.array([0.4, -0.8])
        R = 1.3

        def integrand(rho, th):
            x = c[0] + rho * math.cos(th)
            y = c[1] + rho * math.sin(th)
            return (x * x * y - 0.7 * y * y + 0.3 * x) * rho

        val, _ = integrate.dblquad(integrand, 0, 2 * math.pi, 0, R,
                                   epsabs=1e-12, epsrel=1e-12)
        mean = val / (math.pi * R * R)
        assert ball_mean_poly(p, c, R) == pytest.approx(mean, abs=1e-10)


class TestPhDimension:
    def test_constants_only(self):
        assert ph_dimension(Dimension(2), 0) == 1

    def test_n2_d2(self):
        assert ph_dimension(Dimension(2), 2) == 5

    def test_n4_d3(self):
        assert ph_dimension(Dimension(4), 3) == 35

    def test_floor_of_real_growth(self):
        assert ph_dimension(Dimension(2), 2.9) == ph_dimension(Dimension(2), 2)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_closed_form_all_degrees(self, n):
        for d in range(0, 11):
            got = ph_dimension(Dimension(n), d)
            closed = math.comb(n + d, n) - (math.comb(d, n) if d >= n else 0)
            assert got == closed, (n, d)

    def test_negative_rejected(self):
        from qflatlab import QflatError
        with pytest.raises(QflatError):
            ph_dimension(Dimension(2), -1)
