import math

import numpy as np
import pytest

from shubin.errors import DegreeMismatch, DimensionMismatch, InvalidExcision, ZeroPoint
from shubin.registry import shifted_quadratic_power
from shubin.symring import (
    ClassicalSymbol,
    ExcisionProfile,
    HomogeneousComponent,
    SymbolTerm,
    smoothstep,
    sphere_grid,
    to_grid,
)

from conftest import single


def comp(coeff, beta, alpha, s, degree=None):
    t = SymbolTerm(coeff, beta, alpha, s)
    return HomogeneousComponent(t.degree if degree is None else degree, [t], 1, 1)


class TestEvalComponent:
    def test_ho_principal_at_unit_point(self, ho):
        assert ho.principal.evaluate(np.array([[1.0, 0.0]]))[0, 0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_rho_minus_two(self):
        c = comp(1.0, (0,), (0,), -1)
        assert c.evaluate(np.array([[2.0, 0.0]]))[0, 0, 0] == pytest.approx(0.25, abs=1e-15)

    def test_degree_two_scaling(self, rng):
        c = comp(1.0, (1,), (1,), 0)
        p = rng.normal(size=(5, 2))
        for t in (0.3, 2.5):
            assert np.allclose(c.evaluate(t * p), t**2 * c.evaluate(p), rtol=1e-13)

    def test_zero_point_raises(self):
        with pytest.raises(ZeroPoint):
            comp(1.0, (0,), (0,), -1).evaluate(np.array([[0.0, 0.0]]))


class TestDifferentiate:
    def test_dxi_of_ho_principal(self, ho):
        d = ho.principal.derivative(1)
        assert d.evaluate(np.array([[0.0, 1.0]]))[0, 0, 0] == pytest.approx(1.0)
        assert d.degree == pytest.approx(1.0)

    def test_product_rule_on_ring_term(self, rng):
        # d_x (x rho^-2) = rho^-2 - 2 x^2 rho^-4
        d = comp(1.0, (1,), (0,), -1).derivative(0)
        p = rng.normal(size=(6, 2))
        r2 = (p**2).sum(1)
        expect = 1 / r2 - 2 * p[:, 0] ** 2 / r2**2
        assert np.allclose(d.evaluate(p)[:, 0, 0], expect, rtol=1e-13)

    def test_degree_drops_by_one(self):
        c = comp(1.0, (2,), (1,), -2.5)
        for v in (0, 1):
            assert c.derivative(v).degree == pytest.approx(c.degree - 1)


class TestEvalFull:
    def test_ho_at_origin(self, ho):
        assert ho.eval_full(np.array([[0.0, 0.0]]))[0, 0, 0] == pytest.approx(0.5)

    def test_glued_vanishes_inside_excision(self):
        a = single(-2, 1.0, (0,), (0,), -1)
        assert a.eval_full(np.array([[0.1, 0.0]]))[0, 0, 0] == 0

    def test_shifted_power_value(self):
        a = shifted_quadratic_power(-2.0)
        assert a.eval_full(np.array([[1.0, 1.0]]))[0, 0, 0] == pytest.approx(1 / 9, rel=1e-14)

    def test_excision_irrelevant_outside_r1(self, rng):
        a = single(-2, 1.0, (0,), (0,), -1)
        b = a.with_excision(ExcisionProfile(0.2, 0.9))
        p = rng.normal(size=(20, 2))
        p = p / np.linalg.norm(p, axis=1)[:, None] * rng.uniform(1.0, 4.0, size=(20, 1))
        assert np.array_equal(a.eval_full(p), b.eval_full(p))


class TestSphereQuadrature:
    def test_circle_length(self):
        assert sphere_grid(1).weights.sum() == pytest.approx(2 * math.pi, rel=1e-12)

    def test_cos_squared(self):
        g = sphere_grid(1)
        assert g.integrate(g.nodes[:, 0] ** 2) == pytest.approx(math.pi, rel=1e-12)

    def test_three_sphere_area(self):
        g = sphere_grid(2)
        assert g.weights.sum() == pytest.approx(2 * math.pi**2, rel=1e-10)
        assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1.0)


class TestGridComponent:
    def test_matches_ring_component_off_grid(self, rng):
        c = comp(1.0, (1,), (2,), -1.25)
        g = to_grid(c, sphere_grid(1))
        p = rng.normal(size=(10, 2))
        assert np.allclose(g.evaluate(p), c.evaluate(p), rtol=1e-10, atol=1e-12)

    def test_derivative_matches_ring(self, rng):
        c = comp(1.0, (1,), (2,), -1.25)
        g = to_grid(c, sphere_grid(1))
        p = rng.normal(size=(10, 2))
        for v in (0, 1):
            assert np.allclose(g.derivative(v).evaluate(p), c.derivative(v).evaluate(p), rtol=1e-8, atol=1e-10)

    def test_homogeneous_extension(self, rng):
        g = to_grid(comp(2.0, (0,), (1,), 0.5), sphere_grid(1))
        p = rng.normal(size=(4, 2))
        assert np.allclose(g.evaluate(3 * p), 3 ** g.degree * g.evaluate(p))


class TestValidation:
    def test_degree_mismatch(self):
        c = comp(1.0, (0,), (0,), -1)
        with pytest.raises(DegreeMismatch):
            ClassicalSymbol(-1, [c], 1, 1)

    def test_dimension_mismatch(self):
        c1 = comp(1.0, (0,), (0,), -1)
        c2 = HomogeneousComponent(-3, [SymbolTerm(np.eye(2), (0,), (0,), -1.5)], 1, 2)
        with pytest.raises(DimensionMismatch):
            ClassicalSymbol(-2, [c1, c2], 1, 1)

    def test_bad_excision(self):
        with pytest.raises(InvalidExcision):
            ExcisionProfile(1.0, 0.5)


def test_smoothstep_is_monotone_and_clamped():
    t = np.linspace(-0.5, 1.5, 401)
    s = smoothstep(t)
    assert s.min() == 0 and s.max() == 1
    assert np.all(np.diff(s) >= -1e-15)
