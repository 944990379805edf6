import math

import mpmath
import numpy as np
import pytest

from shubin import registry
from shubin.errors import NotSelfAdjoint
from shubin.spectra import (
    branch_difference_limit,
    check_self_adjoint,
    eta,
    eta_pole_fit,
    eta_residue_at_zero,
    sample_table,
    zeta,
    zeta_branch_difference,
    zeta_pole,
)
from shubin.symring import ClassicalSymbol, poly


def riemann(z):
    return complex(mpmath.zeta(z))


class TestZeta:
    def test_two(self, ho):
        s = zeta(ho, 2)
        assert abs(s.value / (math.pi**2 / 6) - 1) < 0.02
        assert s.method == "symbolic" and s.truncation_uncertainty >= 0

    def test_four(self, ho):
        assert abs(zeta(ho, 4).value / (math.pi**4 / 90) - 1) < 0.01

    def test_oracle(self, ho):
        assert zeta(ho, 2, method="oracle").value == pytest.approx(math.pi**2 / 6, abs=1e-10)

    @pytest.mark.parametrize("z", [2.5, 3 + 0.5j])
    def test_symbolic_matches_oracle(self, ho, z):
        sym = zeta(ho, z)
        orc = zeta(ho, z, method="oracle")
        assert abs(sym.value - orc.value) <= sym.truncation_uncertainty + orc.truncation_uncertainty + 1e-8
        assert abs(orc.value - riemann(z)) < 1e-9

    def test_continuation_inside_strip(self, ho):
        # zeta_HO is the Riemann zeta function; 0.5 + 2i is reached by continuation
        s = zeta(ho, 0.3 + 2j)
        assert abs(s.value - riemann(0.3 + 2j)) < 1e-4

    def test_value_at_zero(self, ho):
        s = zeta(ho, 0)
        assert s.method == "symbolic+circle"
        assert abs(s.value + 0.5) < 1e-4

    def test_sample_table(self, ho):
        rows = sample_table(lambda z: zeta(ho, z, method="oracle"), [2, 3])
        assert [r.row()[0] for r in rows] == [2.0, 3.0]


class TestZetaPoles:
    def test_j0(self, ho):
        rep = zeta_pole(ho, 0, method="oracle")
        assert rep.predicted_location == pytest.approx(1)
        assert rep.residue_formula_value == pytest.approx(1, abs=1e-4)
        assert rep.residue == pytest.approx(1, abs=1e-3)
        assert rep.location == pytest.approx(1, abs=1e-3)

    def test_j1(self, ho):
        rep = zeta_pole(ho, 1, method="oracle")
        assert rep.predicted_location == pytest.approx(0.5)
        assert abs(rep.residue_formula_value) < 1e-6

    def test_scaled(self):
        a = registry.harmonic_oscillator(4.0)
        rep = zeta_pole(a, 0, method="oracle")
        assert rep.residue_formula_value == pytest.approx(0.25, abs=1e-4)
        assert rep.residue == pytest.approx(0.25, abs=1e-3)
        assert rep.location == pytest.approx(1, abs=1e-3)

    def test_simple_pole(self, ho):
        # a second order term would show up as a large fit residual
        rep = zeta_pole(ho, 0, method="oracle")
        zs = [s.z for s in rep.samples]
        vals = np.array([s.value for s in rep.samples])
        A = np.stack([1 / (np.array(zs) - 1) ** 2, 1 / (np.array(zs) - 1), np.ones(4), np.array(zs) - 1], axis=1)
        c = np.linalg.solve(A, vals)
        assert abs(c[0]) <= 1e-3 * abs(c[1])


class TestEta:
    def test_symmetric_vanishes(self, diag_m1):
        for z in (2, 1.5 + 0.5j):
            assert abs(eta(diag_m1, z).value) < 1e-8

    def test_asymmetric(self, diag_m2):
        s = eta(diag_m2, 2)
        assert abs(s.value / (math.pi**2 / 8) - 1) < 0.02

    def test_oracle(self, diag_m2, diag_m1):
        assert eta(diag_m2, 2, method="oracle").value == pytest.approx(math.pi**2 / 8, abs=1e-8)
        assert eta(diag_m1, 2, method="oracle").value == 0

    @pytest.mark.slow
    def test_regular_at_zero(self, diag_m2):
        # (1 - 2^-z) zeta_R(z) vanishes at 0
        s = eta(diag_m2, 0)
        assert s.method == "symbolic+circle"
        assert abs(s.value) < 5e-3

    def test_not_self_adjoint(self):
        a = ClassicalSymbol.from_ring(poly({(2, 0): 1.0, (0, 2): 1.0, (1, 1): 1.0}))
        with pytest.raises(NotSelfAdjoint):
            eta(a, 2)

    def test_self_adjoint_check(self, ho, diag_m2):
        assert check_self_adjoint(ho) == 0
        assert check_self_adjoint(diag_m2) < 1e-12


class TestRegularity:
    @pytest.mark.parametrize("c2", [-1.0, -2.0])
    def test_projection_residue(self, c2):
        a = registry.diag_harmonic_oscillator((1.0, c2))
        assert abs(eta_residue_at_zero(a)) < 1e-6

    @pytest.mark.parametrize("c2", [-1.0, -2.0])
    def test_pole_fit(self, c2):
        a = registry.diag_harmonic_oscillator((1.0, c2))
        assert abs(eta_pole_fit(a).residue) < 1e-2


class TestBranchDifference:
    def test_positive_operator(self, ho):
        assert abs(zeta_branch_difference(ho, 0.1).value) < 1e-6

    def test_closed_form(self, diag_m1):
        # the negative block contributes (e^(i pi z) - e^(-i pi z)) zeta_R(z)
        s = zeta_branch_difference(diag_m1, 0.1)
        assert abs(s.value - 2j * math.sin(0.1 * math.pi) * riemann(0.1)) < 1e-6

    def test_integer_minus_one(self, diag_m1):
        s = zeta_branch_difference(diag_m1, -1)
        assert abs(s.value) < 1e-8

    def test_integer_one(self, diag_m1):
        # -2 pi i = (2 pi i / m) Res(Pi a^-1) with Res(-HO^-1) = -2
        s = zeta_branch_difference(diag_m1, 1)
        assert abs(s.value + 2j * math.pi) < 1e-8

    @pytest.mark.slow
    def test_limit_circle(self, diag_m1):
        lim = branch_difference_limit(diag_m1)
        assert abs(lim.value) < 1e-4

    @pytest.mark.slow
    def test_limit_richardson(self, diag_m1):
        # linear extrapolation from z = 0.1 and z = 0.05
        lim = branch_difference_limit(diag_m1, method="richardson", points=(0.1, 0.05))
        assert abs(lim.value) < 1e-4
