import math

import numpy as np
import pytest

from shubin.errors import ContourConvergence, InvalidSector
from shubin.resolvent import (
    ContourSpec,
    contour_nodes,
    default_eps,
    panels_for_decay,
    resolvent_parametrix_jet,
)
OMEGA = np.array([1.0, 0.0])


class TestJets:
    def test_leading_value(self, ho):
        jet = resolvent_parametrix_jet(ho, -1.0, OMEGA, 2, 1)
        assert jet.value(0)[0, 0] == pytest.approx(-2 / 3)

    def test_odd_derivative_vanishes(self, ho):
        jet = resolvent_parametrix_jet(ho, -1.0, OMEGA, 1, 1)
        assert abs(jet.jets[0][((0,), (1,))][0, 0]) < 1e-15

    def test_inverse_of_lambda_minus_principal(self, diag_m2):
        lam = 0.3 + 1.1j
        omega = np.array([0.6, 0.8])
        jet = resolvent_parametrix_jet(diag_m2, lam, omega, 1, 0)
        a0 = diag_m2.principal.evaluate(omega[None])[0]
        assert np.allclose(jet.value(0) @ (lam * np.eye(2) - a0), np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("k", range(5))
    def test_parameter_homogeneity(self, rho2_plus_1, k):
        # b_(-2-k)(t w, t^2 lam) t^(2+k) = b_(-2-k)(w, lam)
        w = np.array([0.3, -0.7])
        lam = -0.4 + 0.9j
        base = resolvent_parametrix_jet(rho2_plus_1, lam, w, 5, 0).value(k)
        for t in (0.5, 1.7):
            scaled = resolvent_parametrix_jet(rho2_plus_1, t**2 * lam, t * w, 5, 0).value(k)
            assert np.allclose(scaled * t ** (2 + k), base, atol=1e-10)

    def test_defining_identity(self, rho2_plus_1):
        # component k of (lambda - a) # sum_l b_l, with lambda of weight m = 2:
        # sum_{p + l + 2s = k} (1/s!) d_xi^s (lambda delta_p0 - a_p) D_x^s b_l
        lam = -2.0 + 0.5j
        w = np.array([0.8, 0.6])
        K = 6
        jet = resolvent_parametrix_jet(rho2_plus_1, lam, w, K, K)
        for k in range(K):
            total = 0j
            for s in range(k // 2 + 1):
                for p in range(k - 2 * s + 1):
                    l = k - 2 * s - p
                    if p >= len(rho2_plus_1.components):
                        continue
                    c = rho2_plus_1.components[p]
                    left = -c.partial((0, s)).evaluate(w[None])[0, 0, 0] if not c.is_zero else 0.0
                    if p == 0 and s == 0:
                        left += lam
                    right = (-1j) ** s * jet.jets[l][((s,), (0,))][0, 0]
                    total += left * right / math.factorial(s)
            assert total == pytest.approx(1.0 if k == 0 else 0.0, abs=1e-12)

    def test_jet_consistency_with_finite_differences(self, rho2_plus_1):
        lam = -1.0 + 0.2j
        w = np.array([0.6, 0.8])
        h = 1e-4
        jet = resolvent_parametrix_jet(rho2_plus_1, lam, w, 3, 1)
        for v, key in ((0, ((1,), (0,))), (1, ((0,), (1,)))):
            e = np.zeros(2)
            e[v] = h
            plus = resolvent_parametrix_jet(rho2_plus_1, lam, w + e, 3, 0)
            minus = resolvent_parametrix_jet(rho2_plus_1, lam, w - e, 3, 0)
            for k in range(3):
                fd = (plus.value(k) - minus.value(k)) / (2 * h)
                assert np.allclose(fd, jet.jets[k][key], atol=1e-6)


class TestContours:
    def test_keyhole_closed_integral(self):
        nodes = contour_nodes(ContourSpec("keyhole", math.pi / 2, eps=1.0, panels=10))
        assert abs(np.sum(nodes.weights * nodes.lam**-2.0)) < 1e-8

    def test_branch_arguments_in_range(self):
        th = 0.7
        nodes = contour_nodes(ContourSpec("keyhole", th, eps=0.5, panels=6))
        assert np.all(nodes.arg <= th + 1e-15) and np.all(nodes.arg >= th - 2 * math.pi - 1e-15)

    def test_sector_cauchy(self):
        spec = ContourSpec("sector", -math.pi / 4, math.pi / 4, eps=0.5, panels=8, tail=32)
        nodes = contour_nodes(spec)
        w = nodes.weights * nodes.power(0)
        assert np.sum(w / (nodes.lam * (nodes.lam - 1))) == pytest.approx(1.0, abs=1e-8)
        assert abs(np.sum(w / (nodes.lam * (nodes.lam + 1)))) < 1e-8

    @pytest.mark.parametrize("c,z", [(0.5, -2.0), (3.0, -0.5 + 0.7j), (1.0 + 1.0j, -1.5), (2.0, 0.4j)])
    def test_keyhole_power(self, c, z):
        nodes = contour_nodes(ContourSpec("keyhole", math.pi, eps=0.25, panels=8, tail=32))
        val = np.sum(nodes.weights * nodes.power(z) * (1 / (nodes.lam - c) - 1 / nodes.lam))
        assert val == pytest.approx(complex(c) ** z, rel=1e-9)

    def test_tail_matches_long_rays(self):
        # truncating at R = 2^8 eps with the tail equals rays out to 2^60 eps
        z = -0.8
        c = 0.7
        g = lambda lam: 1 / (lam - c) - 1 / lam
        short = contour_nodes(ContourSpec("keyhole", math.pi, eps=0.25, panels=8, tail=32))
        long = contour_nodes(ContourSpec("keyhole", math.pi, eps=0.25, panels=60))
        a = np.sum(short.weights * short.power(z) * g(short.lam))
        b = np.sum(long.weights * long.power(z) * g(long.lam))
        assert a == pytest.approx(b, abs=1e-9)

    def test_tail_rejects_slow_decay(self):
        nodes = contour_nodes(ContourSpec("keyhole", math.pi, eps=0.25, panels=4, tail=8))
        with pytest.raises(ContourConvergence):
            nodes.power(1.5)

    def test_panels_for_decay(self):
        spec = ContourSpec("keyhole", math.pi, eps=0.25)
        k = panels_for_decay(spec, -1.0)
        assert 2 * (0.25 * 2.0**k) ** -1 < 1e-10
        with pytest.raises(ContourConvergence):
            panels_for_decay(spec, 0.5)

    def test_invalid_specs(self):
        with pytest.raises(InvalidSector):
            ContourSpec("spiral")
        with pytest.raises(InvalidSector):
            ContourSpec("keyhole", eps=0.0)
        with pytest.raises(InvalidSector):
            ContourSpec("sector", 1.0, 0.5)

    def test_default_eps_below_spectrum(self, ho):
        assert 0 < default_eps(ho) <= 0.5
