import math

import numpy as np
import pytest

from shubin import oracle
from shubin.calculus import (
    Sector,
    adjoint,
    is_elliptic,
    is_lambda_elliptic,
    parametrix,
    principal_restrict,
    sharp,
    symbol_difference,
)
from shubin.errors import InvalidSector, NotElliptic
from shubin.registry import diag_harmonic_oscillator
from shubin.symring import ClassicalSymbol, HomogeneousComponent, RingFull, SymbolTerm, poly, sphere_grid

X = ClassicalSymbol.from_ring(poly({(1, 0): 1.0}))
XI = ClassicalSymbol.from_ring(poly({(0, 1): 1.0}))
PTS = np.random.default_rng(5).normal(size=(12, 2))


def full_values(a, pts=PTS):
    return a.exact.evaluate(pts)[:, 0, 0]


class TestSharp:
    def test_xi_sharp_x(self):
        got = full_values(sharp(XI, X))
        assert np.allclose(got, PTS[:, 0] * PTS[:, 1] - 1j, atol=1e-15)

    def test_commutator(self):
        diff = full_values(sharp(X, XI)) - full_values(sharp(XI, X))
        assert np.all(diff == 1j)

    def test_identity_element(self, rng):
        a = ClassicalSymbol.from_ring(poly({(2, 1): 1 + 2j, (0, 1): -1.0, (1, 0): 0.5}))
        one = ClassicalSymbol.from_ring(poly({(0, 0): 1.0}))
        assert symbol_difference(sharp(a, one), a) == 0
        assert symbol_difference(sharp(one, a), a) == 0

    def test_xi_sharp_x_on_gaussians(self):
        # op(xi) op(x) u against op(x xi - i) u, analytically
        u = oracle.GaussianPoly((1.0, 0.5j, -0.25), 0.9)
        lhs = oracle.apply_symbol(XI.exact, oracle.apply_symbol(X.exact, u))
        rhs = oracle.apply_symbol(poly({(1, 1): 1.0, (0, 0): -1j}), u)
        x = np.linspace(-6, 6, 64)
        assert np.allclose(lhs(x), rhs(x), atol=1e-12)

    def test_order_of_product(self, ho):
        p = parametrix(ho, 6)
        assert sharp(ho, p, 6).order == pytest.approx(0)


class TestAdjoint:
    def test_x_xi(self):
        a = ClassicalSymbol.from_ring(poly({(1, 1): 1.0}))
        got = full_values(adjoint(a))
        assert np.allclose(got, PTS[:, 0] * PTS[:, 1] - 1j, atol=1e-15)

    def test_ho_is_self_adjoint(self, ho):
        assert symbol_difference(adjoint(ho), ho) == 0

    def test_involution(self):
        a = ClassicalSymbol.from_ring(poly({(2, 1): 1 + 2j, (0, 3): -1.0j, (1, 0): 0.5}))
        assert symbol_difference(adjoint(adjoint(a)), a) < 1e-14

    def test_matrix_adjoint_transposes(self):
        c = np.array([[1.0, 2j], [0.0, 3.0]])
        a = ClassicalSymbol.from_ring(RingFull([SymbolTerm(c, (0,), (0,))], 1, 2))
        v = adjoint(a).exact.evaluate(PTS[:1])[0]
        assert np.allclose(v, c.conj().T)


class TestPrincipal:
    def test_ho_is_half_on_circle(self, ho):
        assert np.allclose(principal_restrict(ho).values[:, 0, 0], 0.5)

    def test_x_xi_over_rho2(self):
        c = HomogeneousComponent(0, [SymbolTerm(1.0, (1,), (1,), -1)], 1, 1)
        g = sphere_grid(1)
        vals = principal_restrict(ClassicalSymbol(0, [c], 1, 1)).values[:, 0, 0]
        assert np.allclose(vals, g.nodes[:, 0] * g.nodes[:, 1], atol=1e-15)

    def test_multiplicative(self):
        a = ClassicalSymbol.from_ring(poly({(2, 0): 1.0, (0, 1): 1.0j}))
        b = ClassicalSymbol.from_ring(poly({(1, 1): 2.0, (0, 0): 1.0}))
        lhs = principal_restrict(sharp(a, b)).values
        rhs = principal_restrict(a).values * principal_restrict(b).values
        assert np.allclose(lhs, rhs, atol=1e-13)


class TestEllipticity:
    def test_ho(self, ho):
        chk = is_elliptic(ho)
        assert chk.ok and chk.margin == pytest.approx(0.5)

    def test_x_is_not_elliptic(self):
        assert not is_elliptic(X).ok

    def test_diag_rho2(self):
        a = diag_harmonic_oscillator((2.0, -2.0))
        chk = is_elliptic(a)
        assert chk.ok and chk.margin == pytest.approx(1.0)

    def test_lambda_elliptic_upper_sector(self, ho, diag_m1):
        up = Sector(math.pi / 4, 3 * math.pi / 4)
        assert is_lambda_elliptic(ho, up).ok
        assert is_lambda_elliptic(diag_m1, up).ok

    def test_sector_containing_positive_axis(self, ho):
        assert not is_lambda_elliptic(ho, Sector(-math.pi / 4, math.pi / 4)).ok

    def test_bad_sector(self):
        with pytest.raises(InvalidSector):
            Sector(1.0, 0.5)


class TestParametrix:
    def test_ho_leading(self, ho):
        p = parametrix(ho, 4)
        assert np.allclose(p.principal.evaluate(PTS)[:, 0, 0], 2 / (PTS**2).sum(1))

    def test_two_sided_inverse(self, rho2_plus_1):
        b = parametrix(rho2_plus_1, 8)
        one = ClassicalSymbol.from_ring(poly({(0, 0): 1.0}))
        assert symbol_difference(sharp(rho2_plus_1, b, 8), one, 8) < 1e-12
        assert symbol_difference(sharp(b, rho2_plus_1, 8), one, 8) < 1e-12

    def test_second_term_of_rho2_plus_1(self, rho2_plus_1):
        # the cross term -4 i x xi rho^-6 is part of b_(-4); see the ledger
        b = parametrix(rho2_plus_1, 3)
        r2 = (PTS**2).sum(1)
        expect = -1 / r2**2 - 4j * PTS[:, 0] * PTS[:, 1] / r2**3
        assert np.allclose(b.components[2].evaluate(PTS)[:, 0, 0], expect, rtol=1e-12)
        assert b.components[1].is_zero or np.abs(b.components[1].evaluate(PTS)).max() < 1e-14

    def test_not_elliptic(self):
        with pytest.raises(NotElliptic):
            parametrix(X, 3)

    def test_matrix_parametrix(self, diag_m2):
        b = parametrix(diag_m2, 6)
        one = ClassicalSymbol.from_ring(RingFull([SymbolTerm(np.eye(2), (0,), (0,))], 1, 2))
        assert symbol_difference(sharp(diag_m2, b, 6), one, 6) < 1e-12
