import math

import numpy as np
import pytest

from shubin.calculus import sharp, symbol_difference
from shubin.errors import InvalidBranch, NotLambdaElliptic, UnsupportedSymbol
from shubin.powers import complex_power, power_additivity_check, sectorial_projection
from shubin.registry import diag_harmonic_oscillator
from shubin.symring import sphere_grid

NODES = sphere_grid(1).nodes


def comp_values(P, k):
    return P.components[k].evaluate(NODES)


class TestComplexPower:
    def test_inverse_leading(self, ho):
        P = complex_power(ho, -1.0, exact=False)
        assert np.abs(comp_values(P, 0)[:, 0, 0] - 2.0).max() < 1e-8

    def test_minus_two_leading(self, ho):
        P = complex_power(ho, -2.0, exact=False)
        assert np.abs(comp_values(P, 0)[:, 0, 0] - 4.0).max() < 1e-8

    def test_reduction_at_zero(self, ho):
        P = complex_power(ho, -1.0, exact=False)
        prod = sharp(ho, P, 6)
        assert abs(comp_values(prod, 0) - 1).max() < 1e-8
        for k in range(1, 6):
            assert np.abs(comp_values(prod, k)).max() < 1e-8

    def test_zero_power_is_identity(self, ho):
        P = complex_power(ho, 0)
        assert np.allclose(comp_values(P, 0), 1.0)

    def test_order_and_degrees(self, ho):
        z = -0.3 + 0.2j
        P = complex_power(ho, z, exact=False)
        assert P.order == pytest.approx(2 * z)
        for k, c in enumerate(P.components):
            assert c.degree == pytest.approx(2 * z - k)
        p = np.array([[0.3, -1.2]])
        for t in (0.4, 2.5):
            assert np.allclose(P.components[0].evaluate(t * p), t ** (2 * z) * P.components[0].evaluate(p))

    def test_integer_powers_do_not_depend_on_branch(self, ho):
        a = complex_power(ho, -1.0, theta=math.pi, exact=False)
        b = complex_power(ho, -1.0, theta=math.pi / 2, exact=False)
        assert symbol_difference(a, b, 6) < 1e-8

    def test_holomorphic_in_z(self, ho):
        z, h = -0.7, 1e-3
        P = {s: complex_power(ho, z + s * h, exact=False) for s in (-2, -1, 1, 2)}
        for k in range(3):
            d1 = (comp_values(P[1], k) - comp_values(P[-1], k)) / (2 * h)
            d2 = (comp_values(P[2], k) - comp_values(P[-2], k)) / (4 * h)
            rich = (4 * d1 - d2) / 3
            assert np.abs(d1 - rich).max() < 1e-4

    def test_positive_real_part(self, ho):
        P = complex_power(ho, 0.5, exact=False)
        Q = complex_power(ho, -0.5, exact=False)
        one = sharp(P, Q, 6)
        assert abs(comp_values(one, 0) - 1).max() < 1e-8
        assert np.abs(comp_values(one, 2)).max() < 1e-7

    def test_exact_full_symbol_matches_components_far_out(self, ho):
        P = complex_power(ho, -1.0)
        p = np.array([[30.0, 40.0]])
        glued = sum(c.evaluate(p) for c in P.components)
        assert np.allclose(P.exact.evaluate(p), glued)

    def test_exact_full_symbol_inside_box(self, ho):
        # Mehler: the Weyl symbol of exp(-t(HO - 1/2)) is exp(-tanh(t/2)|p|^2)/cosh(t/2);
        # exp(i/2 d_x d_xi) turns a Gaussian c exp(-s|p|^2) into c/sqrt(1+s^2) at the origin.
        from scipy.integrate import quad

        def integrand(t):
            return 2.0 / (np.exp(t) + 1.0) / np.sqrt(1.0 + np.tanh(t / 2) ** 2)

        expected = quad(integrand, 0.0, 60.0, epsabs=1e-14)[0]
        P = complex_power(ho, -1.0)
        v = P.exact.evaluate(np.array([[0.0, 0.0]]))[0, 0, 0]
        assert abs(v - expected) < 1e-7

    def test_branch_through_spectrum(self, ho):
        with pytest.raises(InvalidBranch):
            complex_power(ho, -0.5, theta=0.0)

    def test_needs_positive_order(self):
        from shubin.acceptance import decaying_symbol
        with pytest.raises(UnsupportedSymbol):
            complex_power(decaying_symbol(), -1.0)


class TestProjection:
    def test_diag_leading_component(self):
        a = diag_harmonic_oscillator((2.0, -2.0))
        Pi = sectorial_projection(a, -math.pi / 4, math.pi / 4)
        v = comp_values(Pi, 0)
        assert np.abs(v - np.diag([1.0, 0.0])).max() < 1e-8

    def test_whole_spectrum_gives_identity(self, ho):
        Pi = sectorial_projection(ho, -math.pi / 4, math.pi / 4)
        assert abs(comp_values(Pi, 0) - 1).max() < 1e-8
        for k in range(1, len(Pi.components)):
            assert np.abs(comp_values(Pi, k)).max() < 1e-8

    @pytest.mark.parametrize("scale", [-1.0, -2.0])
    def test_idempotent(self, scale):
        a = diag_harmonic_oscillator((1.0, scale))
        Pi = sectorial_projection(a, -math.pi / 2, math.pi / 2)
        assert symbol_difference(sharp(Pi, Pi, 5), Pi, 5) < 1e-6

    def test_ray_on_spectrum(self, ho):
        with pytest.raises(NotLambdaElliptic):
            sectorial_projection(ho, 0.0, 1.0)


class TestAdditivity:
    def test_minus_one_twice(self, ho):
        assert power_additivity_check(ho, -1.0, -1.0) < 1e-6

    def test_with_zero(self, ho):
        assert power_additivity_check(ho, -1.0, 0.0) < 1e-8

    def test_matrix(self, diag_m2):
        assert power_additivity_check(diag_m2, -1.0, -1.0, theta=math.pi / 2) < 1e-6

    def test_complex_exponents(self, ho):
        assert power_additivity_check(ho, -0.4 + 0.3j, -0.35 - 0.1j) < 1e-6
