import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import quad

from shubin import oracle, registry
from shubin.acceptance import decaying_symbol
from shubin.calculus import adjoint, sharp
from shubin.errors import Divergent, UnsupportedSymbol
from shubin.symring import ClassicalSymbol, poly


def random_poly(rng, deg):
    return poly({(b, a): complex(rng.normal(), rng.normal()) for b in range(deg + 1) for a in range(deg + 1 - b)})


class TestMatrices:
    def test_ladder_element(self):
        assert oracle.position_matrix(4)[0, 1] == pytest.approx(1 / math.sqrt(2))

    def test_ho_diagonal(self, ho):
        d = oracle.discretize(ho, 50)
        assert np.allclose(d.matrix, np.diag(np.arange(1, 51)), atol=1e-12)
        assert d.hermitian

    def test_x_xi_adjoint(self):
        a = ClassicalSymbol.from_ring(poly({(1, 1): 1.0}))
        d = oracle.discretize(a, 60)
        assert not d.hermitian
        # (X D)^* = D X = X D - i, so x xi - i/2 is self-adjoint
        t = d.trusted
        sym = oracle.discretize(ClassicalSymbol.from_ring(poly({(1, 1): 1.0, (0, 0): -0.5j})), 60).matrix[:t, :t]
        assert np.abs(sym - sym.conj().T).max() < 1e-10
        adj = oracle.discretize(adjoint(a), 60).matrix[:t, :t]
        assert np.abs(adj - d.matrix[:t, :t].conj().T).max() < 1e-10

    def test_tridiagonal_building_blocks(self):
        for M in (oracle.position_matrix(12), oracle.momentum_matrix(12)):
            assert np.count_nonzero(np.triu(M, 2)) == 0 and np.count_nonzero(np.tril(M, -2)) == 0

    def test_commutation(self):
        N = 80
        X, D = oracle.position_matrix(N), oracle.momentum_matrix(N)
        t = int(0.8 * N)
        c = (X @ D - D @ X)[:t, :t]
        assert np.abs(c - 1j * np.eye(t)).max() < 1e-10

    def test_quantization_consistency(self, rng):
        a = ClassicalSymbol.from_ring(random_poly(rng, 2))
        b = ClassicalSymbol.from_ring(random_poly(rng, 3))
        N = 60
        t = int(0.8 * N)
        lhs = oracle.discretize(sharp(a, b), N).matrix[:t, :t]
        rhs = (oracle.discretize(a, N).matrix @ oracle.discretize(b, N).matrix)[:t, :t]
        assert np.abs(lhs - rhs).max() < 1e-9 * np.abs(lhs).max()

    def test_hermite_functions_orthonormal(self):
        x = np.linspace(-20, 20, 4001)
        H = oracle.hermite_functions(x, 30)
        G = H @ H.T * (x[1] - x[0])
        assert np.abs(G - np.eye(30)).max() < 1e-12

    def test_two_dimensional_rejected(self):
        a = ClassicalSymbol.from_ring(poly({((0, 0), (0, 0)): 1.0}, n=2))
        with pytest.raises(UnsupportedSymbol):
            oracle.discretize(a, 10)


class TestEigenvalues:
    def test_ho(self, ho):
        ev = np.sort(oracle.eigenvalues(oracle.discretize(ho, 400)).real)[:20]
        assert np.abs(ev - np.arange(1, 21)).max() < 1e-8

    def test_symmetric_pairs(self, diag_m1):
        ev = oracle.eigenvalues(oracle.discretize(diag_m1, 100)).real
        pos = np.sort(ev[ev > 0])[:20]
        neg = np.sort(-ev[ev < 0])[:20]
        assert np.abs(pos - np.arange(1, 21)).max() < 1e-8
        assert np.abs(neg - np.arange(1, 21)).max() < 1e-8

    def test_square(self):
        a = registry.harmonic_oscillator_square()
        ev = np.sort(oracle.eigenvalues(oracle.discretize(a, 200)).real)[:20]
        assert np.abs(ev - np.arange(1, 21) ** 2).max() < 1e-6

    def test_stable_under_doubling(self, diag_m2):
        e1 = np.sort(oracle.eigenvalues(oracle.discretize(diag_m2, 150)).real)
        e2 = np.sort(oracle.eigenvalues(oracle.discretize(diag_m2, 300)).real)
        low = e1[np.abs(e1) < 50]
        high = e2[np.abs(e2) < 50]
        assert low.shape == high.shape and np.abs(low - high).max() < 1e-9

    def test_trusted_block(self, ho):
        d = oracle.discretize(ho, 100)
        assert oracle.eigenvalues(d).size == 80
        assert oracle.eigenvalues(d, trusted_only=False).size == 100


class TestSums:
    def test_zeta_two(self, ho):
        r = oracle.spectral_sum(oracle.discretize(ho, 400), "zeta", 2)
        assert r.value == pytest.approx(math.pi**2 / 6, abs=1e-10)
        assert r.uncertainty >= 0

    def test_eta_symmetric(self, diag_m1):
        assert oracle.spectral_sum(oracle.discretize(diag_m1, 200), "eta", 2).value == 0

    def test_eta_asymmetric(self, diag_m2):
        r = oracle.spectral_sum(oracle.discretize(diag_m2, 400), "eta", 2)
        assert r.value == pytest.approx(0.75 * math.pi**2 / 6, abs=1e-8)

    def test_continued_sum(self, ho):
        # the Euler-Maclaurin tail continues the sum to zeta_R(-1) = -1/12
        r = oracle.spectral_sum(oracle.discretize(ho, 400), "zeta", -1)
        assert r.value == pytest.approx(-1 / 12, abs=1e-8)

    def test_branch(self, diag_m1):
        # negative eigenvalues pick up e^(-i z arg) with arg = pi or -pi
        d = oracle.discretize(diag_m1, 200)
        up = oracle.spectral_sum(d, "zeta", 2.5, theta=math.pi / 2).value
        down = oracle.spectral_sum(d, "zeta", 2.5, theta=3 * math.pi / 2).value
        zr = oracle.spectral_sum(oracle.discretize(registry.harmonic_oscillator(), 200), "zeta", 2.5).value
        assert up - down == pytest.approx(2j * math.sin(2.5 * math.pi) * zr, abs=1e-9)

    def test_zero_eigenvalue(self):
        a = ClassicalSymbol.from_ring(poly({(0, 0): 0.0, (2, 0): 0.0}))
        with pytest.raises(Divergent):
            oracle.spectral_sum(oracle.discretize(a, 10), "zeta", 2)

    def test_em_tail_closed_form(self):
        # sum_{j > 100} j^-3 against mpmath-free Hurwitz value via scipy
        from scipy.special import zeta as hurwitz

        tail, err = oracle.em_tail(1.0, 0.0, 3.0, 100)
        assert tail == pytest.approx(hurwitz(3.0, 101), rel=1e-12)
        assert err < 1e-12


class TestTrace:
    def test_decaying(self):
        r = oracle.trace(oracle.discretize(decaying_symbol(), 500))
        assert abs(r.value - 0.5) < 1e-4

    def test_linear(self):
        d = oracle.discretize(decaying_symbol(), 300)
        d2 = dataclasses.replace(d, matrix=2.5 * d.matrix)
        assert oracle.trace(d2).value == pytest.approx(2.5 * oracle.trace(d).value, rel=1e-12)


class TestFunctionSymbols:
    def test_heat_operator_at_origin(self):
        # exp(-HO) = e^(-1/2) exp(-(HO - 1/2)); Mehler plus the Weyl-to-left Gaussian factor
        tau = math.tanh(0.5)
        expected = math.exp(-0.5) / math.cosh(0.5) / math.sqrt(1 + tau**2)
        got = oracle.function_symbol(lambda k: np.exp(-k), [[0.0, 0.0]], N=200)[0]
        assert got == pytest.approx(expected, abs=1e-12)

    def test_inverse_at_origin(self):
        # Mehler formula in left quantization
        f = lambda t: 2.0 / (np.exp(t) + 1.0) / np.sqrt(1.0 + np.tanh(t / 2) ** 2)  # noqa: E731
        expected = quad(f, 0.0, 60.0, epsabs=1e-14)[0]
        got = oracle.function_symbol(lambda k: 1.0 / k, [[0.0, 0.0]], N=4000)[0]
        assert abs(got - expected) < 1e-3

    def test_inverse_matches_power_symbol(self, ho):
        from shubin.powers import complex_power

        P = complex_power(ho, -1.0)
        pts = np.array([[0.5, -0.3], [1.2, 0.4]])
        got = oracle.function_symbol(lambda k: 1.0 / k, pts, N=4000)
        assert np.allclose(got, P.exact.evaluate(pts)[:, 0, 0], atol=1e-3)
