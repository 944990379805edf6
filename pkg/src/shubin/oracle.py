"""Independent spectral reference computations in the Hermite basis (n = 1).

The harmonic oscillator ``H = op((x^2 + xi^2 + 1) / 2)`` has eigenvalues
``1, 2, 3, ...`` with the Hermite functions as eigenbasis.  Polynomial
symbols are discretised exactly through the matrices of ``x`` and
``D = -i d/dx`` (left quantization: ``op(x^b xi^a) = X^b D^a``); other
symbols through a quadrature of their matrix elements.

Spectral sums add an Euler-Maclaurin tail for a fitted model
``|lambda_j| ~ c (j + 1 + d)^gamma``, which also continues them
meromorphically in ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.special import bernoulli

from .errors import Divergent, InvalidSymbol, PolePoint, SpectrumNotConverged, UnsupportedSymbol
from .symring import ClassicalSymbol, FullSymbol, RingFull

TRUSTED_FRACTION = 0.8
EM_TERMS = 6


def hermite_functions(x, N: int) -> np.ndarray:
    """Normalised Hermite functions ``h_0 .. h_(N-1)`` at ``x``; shape (N, len(x))."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((N,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-(x**2) / 2)
    if N > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for j in range(2, N):
        out[j] = np.sqrt(2.0 / j) * x * out[j - 1] - np.sqrt((j - 1) / j) * out[j - 2]
    return out


def position_matrix(N: int) -> np.ndarray:
    off = np.sqrt(np.arange(1, N) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def momentum_matrix(N: int) -> np.ndarray:
    """Matrix of ``D = -i d/dx``."""
    off = np.sqrt(np.arange(1, N) / 2.0)
    ddx = np.diag(off, 1) - np.diag(off, -1)
    return -1j * ddx


@dataclass
class HermiteDiscretization:
    """Matrix of ``op(a)`` in the first ``N`` Hermite functions.

    For ``q > 1`` the matrix has ``q x q`` blocks of size ``N``.
    """

    matrix: np.ndarray
    N: int
    q: int
    trusted: int
    hermitian: bool
    name: str = ""

    def block(self, r: int, s: int) -> np.ndarray:
        N = self.N
        return self.matrix[r * N:(r + 1) * N, s * N:(s + 1) * N]


def _poly_matrix(full: RingFull, N: int) -> np.ndarray:
    deg = max(full.polynomial_degree_in("x") + full.polynomial_degree_in("xi"), 1)
    M = N + deg + 2
    X, D = position_matrix(M), momentum_matrix(M)
    q = full.q
    out = np.zeros((q * N, q * N), dtype=complex)
    cache: dict = {}

    def power(A, k, tag):
        if (tag, k) not in cache:
            cache[(tag, k)] = np.linalg.matrix_power(A, k)
        return cache[(tag, k)]

    for t in full.terms:
        b, a = t.beta[0], t.alpha[0]
        s = int(round(t.s_exp.real))
        # rho^(2s) = (x^2 + xi^2)^s, expanded with x-factors to the left
        mat = np.zeros((M, M), dtype=complex)
        for i in range(s + 1):
            mat += math.comb(s, i) * power(X, b + 2 * i, "x") @ power(D, a + 2 * (s - i), "d")
        mat = mat[:N, :N]
        for r in range(q):
            for c in range(q):
                if t.coeff[r, c] != 0:
                    out[r * N:(r + 1) * N, c * N:(c + 1) * N] += t.coeff[r, c] * mat
    return out


def _quadrature_matrix(full: FullSymbol, N: int) -> np.ndarray:
    """Matrix elements ``<h_j, op(a) h_k>`` of a general symbol by quadrature.

    ``<h_j, op(a) h_k> = (2 pi)^(-1/2) (-i)^k int int h_j(x) a(x, xi) e^(i x xi) h_k(xi)``.
    """
    reach = math.sqrt(2 * N + 1)
    X = reach + 10.0
    h = math.pi / (2 * (reach + X)) * 1.6
    m = int(2 * X / h) + 1
    x = np.linspace(-X, X, m)
    w = np.full(m, x[1] - x[0])
    Hf = hermite_functions(x, N)
    q = full.q
    out = np.zeros((q * N, q * N), dtype=complex)
    phase = (-1j) ** np.arange(N)
    XX, XI = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([XX.ravel(), XI.ravel()], axis=1)
    vals = full.evaluate(pts).reshape(m, m, q, q)
    kern = np.exp(1j * XX * XI) * np.outer(w, w) / math.sqrt(2 * math.pi)
    for r in range(q):
        for c in range(q):
            A = vals[:, :, r, c] * kern
            out[r * N:(r + 1) * N, c * N:(c + 1) * N] = (Hf @ A @ Hf.T) * phase[None, :]
    return out


def discretize(a, N: int = 400, name: str = "") -> HermiteDiscretization:
    """Matrix of ``op(a)`` truncated to the first ``N`` Hermite functions.

    Parameters
    ----------
    a : ClassicalSymbol or FullSymbol
        Needs an exact evaluator.  Polynomial symbols are handled exactly;
        others by quadrature of the matrix elements.
    """
    full = a.exact if isinstance(a, ClassicalSymbol) else a
    if full is None:
        raise InvalidSymbol("the oracle needs a symbol with an exact evaluator")
    if full.n != 1:
        raise UnsupportedSymbol("the Hermite oracle is one-dimensional")
    if isinstance(full, RingFull) and full.is_polynomial:
        mat = _poly_matrix(full, N)
    else:
        mat = _quadrature_matrix(full, N)
    herm = bool(np.allclose(mat, mat.conj().T, atol=1e-10 * max(1.0, np.abs(mat).max())))
    trusted = int(TRUSTED_FRACTION * N)
    return HermiteDiscretization(mat, N, full.q, trusted, herm, name or getattr(a, "name", "") or "")


def eigenvalues(d: HermiteDiscretization, trusted_only: bool = True) -> np.ndarray:
    """Eigenvalues sorted by modulus; the trusted lowest part by default."""
    if d.hermitian:
        ev = scipy.linalg.eigvalsh(d.matrix).astype(complex)
    else:
        ev = scipy.linalg.eigvals(d.matrix)
    ev = ev[np.argsort(np.abs(ev), kind="stable")]
    if trusted_only:
        ev = ev[: d.trusted * d.q]
    return ev


# ---------------------------------------------------------------------------
# sums with Euler-Maclaurin tails


@dataclass
class PowerModel:
    """``|lambda_j| ~ c (j + 1 + d)^gamma`` fitted on the top of a sequence."""

    c: float
    d: float
    gamma: float
    rel_residual: float

    def __call__(self, j):
        return self.c * (np.asarray(j, dtype=float) + 1 + self.d) ** self.gamma


def fit_power_model(values: np.ndarray, start: int | None = None) -> PowerModel:
    v = np.abs(np.asarray(values, dtype=float))
    M = v.size
    if M < 8:
        raise SpectrumNotConverged("too few eigenvalues for a tail model")
    start = M // 2 if start is None else start
    j = np.arange(start, M, dtype=float)
    y = np.log(v[start:])

    def model(jj, logc, d, gamma):
        return logc + gamma * np.log(jj + 1 + d)

    g0 = (y[-1] - y[0]) / (math.log(j[-1] + 1) - math.log(j[0] + 1))
    p0 = (y[-1] - g0 * math.log(j[-1] + 1), 0.0, g0)
    try:
        popt, _ = scipy.optimize.curve_fit(model, j, y, p0=p0, bounds=([-50, -0.99, 1e-3], [50, 1e3, 50]),
                                           xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    except RuntimeError as exc:  # pragma: no cover - pathological spectra
        raise SpectrumNotConverged(str(exc))
    res = model(j, *popt) - y
    return PowerModel(math.exp(popt[0]), popt[1], popt[2], float(np.sqrt(np.mean(res**2))))


def rising(s: complex, r: int) -> complex:
    """Rising factorial ``s (s + 1) ... (s + r - 1)`` for complex ``s``."""
    out = 1.0 + 0j
    for i in range(r):
        out *= s + i
    return out


def em_tail(c: float, d: float, s: complex, M: int, terms: int = EM_TERMS):
    """``sum_{t >= M} c (t + 1 + d)^(-s)`` continued meromorphically in ``s``.

    Returns the value and the size of the first omitted correction.
    """
    s = complex(s)
    if abs(s - 1) < 1e-13:
        raise PolePoint("tail sum has a pole at s = 1")
    u = M + 1 + d
    total = u ** (1 - s) / (s - 1) + 0.5 * u ** (-s)
    B = bernoulli(2 * terms + 2)
    last = 0.0
    for k in range(1, terms + 2):
        r = 2 * k - 1
        deriv = (-1) ** r * rising(s, r) * u ** (-s - r)
        term = -B[2 * k] / math.factorial(2 * k) * deriv
        if k <= terms:
            total += term
        else:
            last = abs(term)
    return c * total, abs(c) * last


@dataclass
class SpectralSumResult:
    value: complex
    uncertainty: float
    count: int


def _branch_power(ev: np.ndarray, z: complex, theta: float) -> np.ndarray:
    arg = np.angle(ev)
    arg = np.where(arg >= theta, arg - 2 * np.pi, arg)
    arg = np.where(arg <= theta - 2 * np.pi, arg + 2 * np.pi, arg)
    return np.exp(-z * (np.log(np.abs(ev)) + 1j * arg))


def _tail_for(ev: np.ndarray, z: complex, theta: float, kind: str):
    """Explicit sum over ``ev`` plus the modelled tail beyond it."""
    z = complex(z)
    if ev.size == 0:
        return 0.0, 0.0
    if kind == "zeta":
        explicit = _branch_power(ev, z, theta).sum()
        phase = _branch_power(np.array([ev[-1] / abs(ev[-1])]), z, theta)[0]
    else:
        explicit = (np.sign(ev.real) * np.abs(ev) ** (-z)).sum()
        phase = np.sign(ev[-1].real)
    model = fit_power_model(np.abs(ev))
    s = model.gamma * z
    tail, em_err = em_tail(model.c ** (-z), model.d, s, ev.size)
    misfit = abs(z) * model.rel_residual * abs(tail) * 10
    return explicit + phase * tail, em_err + misfit


def spectral_sum(d: HermiteDiscretization, kind: str, z, theta: float = np.pi) -> SpectralSumResult:
    """Zeta or eta sum over the trusted eigenvalues with a modelled tail.

    Parameters
    ----------
    kind : {"zeta", "eta"}
    z : complex
    theta : float
        Branch ray for ``lambda^(-z)``; ``arg`` is taken in
        ``(theta - 2 pi, theta)``.
    """
    ev = eigenvalues(d)
    if np.any(ev == 0):
        raise Divergent("zero eigenvalue")
    if kind not in ("zeta", "eta"):
        raise ValueError(f"unknown sum {kind!r}")
    total, err = 0.0, 0.0
    groups = _spectral_groups(ev)
    for g in groups:
        v, e = _tail_for(g, z, theta, kind)
        total += v
        err += e
    return SpectralSumResult(complex(total), float(err), int(ev.size))


def _spectral_groups(ev: np.ndarray) -> list:
    """Split a spectrum into rays (positive, negative, others by angle)."""
    if np.all(np.abs(ev.imag) <= 1e-9 * np.abs(ev)):
        pos = np.sort(ev[ev.real > 0].real)
        neg = -np.sort(-ev[ev.real < 0].real)
        return [g.astype(complex) for g in (pos, neg) if g.size]
    ang = np.round(np.angle(ev), 6)
    return [ev[ang == a] for a in np.unique(ang)]


def trace(d: HermiteDiscretization) -> SpectralSumResult:
    """Trace over the trusted block plus a modelled tail of the diagonal."""
    diag = np.diag(d.matrix)
    N, q = d.N, d.q
    total, err = 0.0, 0.0
    for r in range(q):
        dd = diag[r * N:r * N + d.trusted]
        explicit = dd.sum()
        tail, e = 0.0, 0.0
        mag = np.abs(dd)
        if mag[-1] > 1e-14 * max(mag.max(), 1e-300):
            # the diagonal decays, so the growth model is fitted to 1/|d_k|
            model = fit_power_model(1.0 / mag)
            tail, e = em_tail(1.0 / model.c, model.d, model.gamma, dd.size)
            sign = dd[-1] / abs(dd[-1])
            tail = sign * tail
            e += model.rel_residual * abs(tail) * 10
        total += explicit + tail
        err += e
    return SpectralSumResult(complex(total), float(err), d.trusted * q)


def lowest_modulus(d: HermiteDiscretization) -> float:
    """Smallest ``|lambda|``; used to check the contour radius."""
    return float(np.abs(eigenvalues(d)).min())


# ---------------------------------------------------------------------------
# symbols of functions of the oscillator


def function_symbol(f, points, N: int = 3000) -> np.ndarray:
    """Left symbol of ``f(H)`` for the harmonic oscillator ``H``.

    ``sigma(x, xi) = sqrt(2 pi) e^(-i x xi) sum_k f(k + 1) i^k h_k(x) h_k(xi)``.

    Parameters
    ----------
    f : callable
        Vectorised function of the eigenvalues ``1, 2, ...``.
    points : array_like, shape (P, 2)
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, xi = pts[:, 0], pts[:, 1]
    hx = hermite_functions(x, N)
    hxi = hermite_functions(xi, N)
    k = np.arange(N)
    coef = np.asarray(f(k + 1.0), dtype=complex) * (1j) ** k
    s = np.einsum("k,kp,kp->p", coef, hx, hxi)
    return math.sqrt(2 * math.pi) * np.exp(-1j * x * xi) * s


def apply_poly(full: RingFull, coeffs: np.ndarray) -> np.ndarray:
    """Apply ``op(a)`` to a finite Hermite expansion (``q = 1``).

    ``coeffs`` must leave enough zero padding at the top for the degree
    of ``a``; the result has the same length.
    """
    N = coeffs.shape[0]
    mat = _poly_matrix(full, N + 16)[:N, :N]
    return mat @ coeffs


# ---------------------------------------------------------------------------
# analytic action on Gaussian test functions


@dataclass(frozen=True)
class GaussianPoly:
    """Test function ``P(x) exp(-x^2 / (2 sigma^2))`` with complex polynomial ``P``.

    ``coeffs`` are in increasing powers of ``x``.  Multiplication by ``x``
    and ``D = -i d/dx`` keep the form, so ``op`` of a polynomial symbol acts
    exactly.
    """

    coeffs: tuple
    sigma: float = 1.0

    @property
    def poly(self) -> np.polynomial.Polynomial:
        return np.polynomial.Polynomial(np.asarray(self.coeffs, dtype=complex))

    def _with(self, p: np.polynomial.Polynomial) -> "GaussianPoly":
        return GaussianPoly(tuple(complex(c) for c in p.coef), self.sigma)

    def times_x(self, k: int = 1) -> "GaussianPoly":
        return self._with(self.poly * np.polynomial.Polynomial([0, 1]) ** k)

    def D(self, k: int = 1) -> "GaussianPoly":
        p = self.poly
        x = np.polynomial.Polynomial([0, 1])
        for _ in range(k):
            p = -1j * (p.deriv() - x * p / self.sigma**2)
        return self._with(p)

    def plus(self, other: "GaussianPoly", c: complex = 1.0) -> "GaussianPoly":
        return self._with(self.poly + c * other.poly)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.poly(x) * np.exp(-x**2 / (2 * self.sigma**2))


def apply_symbol(full: RingFull, u: GaussianPoly) -> GaussianPoly:
    """``op(a) u`` for a scalar polynomial symbol with ``n = 1`` (left quantization)."""
    if full.n != 1 or full.q != 1 or not full.is_polynomial:
        raise UnsupportedSymbol("analytic action needs a scalar polynomial symbol with n = 1")
    out = GaussianPoly((0j,), u.sigma)
    for t in full.terms:
        s = int(round(t.s_exp.real))
        for i in range(s + 1):
            # rho^(2s) = sum_i C(s, i) x^(2i) xi^(2(s - i)), x-factors left
            v = u.D(t.alpha[0] + 2 * (s - i)).times_x(t.beta[0] + 2 * i)
            out = out.plus(v, complex(t.coeff[0, 0]) * math.comb(s, i))
    return out


def inner(u: GaussianPoly, v: GaussianPoly, nodes: int = 400) -> complex:
    """``<u, v> = int u conj(v) dx`` by the trapezoid rule (spectrally accurate here)."""
    X = 12.0 * max(u.sigma, v.sigma) + 10.0
    x = np.linspace(-X, X, nodes + 1)
    return complex(np.sum(u(x) * np.conj(v(x))) * (x[1] - x[0]))
