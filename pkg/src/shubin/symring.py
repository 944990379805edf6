"""Classical Shubin symbols and their homogeneous components.

A point of phase space is stored as a row ``(x_1..x_n, xi_1..xi_n)`` and a
symbol value at a batch of points is an array of shape ``(B, q, q)``.

Two representations of a homogeneous component are used.

``HomogeneousComponent``
    finite sum of terms ``c * x^beta xi^alpha * rho^(2 s)`` where
    ``rho^2 = |x|^2 + |xi|^2``.  Closed under products and derivatives, so
    everything built from polynomial input stays exact.
``GridComponent``
    samples of the restriction to the unit sphere together with a jet
    budget.  Used for components produced by contour integrals.  Off-node
    values and derivatives use trigonometric interpolation on ``S^1``, so
    this representation is limited to ``n = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegreeMismatch,
    DimensionMismatch,
    GridResolution,
    InsufficientExpansion,
    InvalidExcision,
    InvalidSymbol,
    JetExhausted,
    ZeroPoint,
)

DEGREE_TOL = 1e-10
UNLIMITED_JETS = 10**6


def _as_complex(z) -> complex:
    return complex(z)


def _is_nonneg_int(s: complex) -> bool:
    return abs(s.imag) < 1e-14 and abs(s.real - round(s.real)) < 1e-14 and round(s.real) >= 0


def _same_degree(a: complex, b: complex, tol: float = DEGREE_TOL) -> bool:
    return abs(complex(a) - complex(b)) <= tol * max(1.0, abs(a), abs(b))


def as_points(points, n: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[-1] != 2 * n:
        raise DimensionMismatch(f"points must have {2 * n} coordinates, got {pts.shape[-1]}")
    return pts


def rho(points: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(points) ** 2, axis=-1))


def complex_rpow(r: np.ndarray, mu: complex) -> np.ndarray:
    """``r**mu`` for positive ``r`` and complex ``mu``."""
    mu = complex(mu)
    if mu.imag == 0.0:
        return np.power(r, mu.real).astype(complex)
    return np.exp(mu * np.log(r))


# ---------------------------------------------------------------------------
# terms


class SymbolTerm:
    """Single term ``coeff * x^beta * xi^alpha * rho^(2 s_exp)``.

    Parameters
    ----------
    coeff : array_like, shape (q, q)
        Matrix coefficient.  Scalars are promoted to ``1 x 1``.
    beta, alpha : sequence of int
        Exponents of ``x`` and ``xi``.
    s_exp : complex
        Half the exponent of ``rho``.
    """

    __slots__ = ("coeff", "beta", "alpha", "s_exp")

    def __init__(self, coeff, beta: Sequence[int], alpha: Sequence[int], s_exp: complex = 0.0):
        c = np.asarray(coeff, dtype=complex)
        if c.ndim == 0:
            c = c.reshape(1, 1)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DimensionMismatch("term coefficient must be a square matrix")
        beta = tuple(int(b) for b in beta)
        alpha = tuple(int(a) for a in alpha)
        if len(beta) != len(alpha):
            raise DimensionMismatch("beta and alpha must have equal length")
        if min(beta + alpha, default=0) < 0:
            raise InvalidSymbol("negative monomial exponent")
        self.coeff = c
        self.beta = beta
        self.alpha = alpha
        self.s_exp = _as_complex(s_exp)

    @property
    def n(self) -> int:
        return len(self.beta)

    @property
    def q(self) -> int:
        return self.coeff.shape[0]

    @property
    def exponents(self) -> tuple:
        return self.beta + self.alpha

    @property
    def degree(self) -> complex:
        return sum(self.beta) + sum(self.alpha) + 2 * self.s_exp

    @property
    def is_smooth(self) -> bool:
        return _is_nonneg_int(self.s_exp)

    def key(self):
        s = self.s_exp
        return (self.exponents, round(s.real, 12), round(s.imag, 12))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = as_points(points, self.n)
        mono = np.ones(pts.shape[0])
        for v, e in enumerate(self.exponents):
            if e:
                mono = mono * pts[:, v] ** e
        s = self.s_exp
        if s == 0:
            fac = mono.astype(complex)
        else:
            r2 = np.sum(pts**2, axis=1)
            if _is_nonneg_int(s):
                fac = mono * r2 ** int(round(s.real))
            else:
                if np.any(r2 == 0.0):
                    raise ZeroPoint("term with non-polynomial rho power evaluated at the origin")
                fac = mono * np.exp(s * np.log(r2))
        return fac[:, None, None] * self.coeff[None, :, :]

    def derivative(self, var: int) -> list:
        """Partial derivative in coordinate ``var`` (x first, then xi)."""
        n = self.n
        e = list(self.exponents)
        out = []
        if e[var] > 0:
            e1 = list(e)
            e1[var] -= 1
            out.append(SymbolTerm(self.coeff * e[var], e1[:n], e1[n:], self.s_exp))
        if self.s_exp != 0:
            e2 = list(e)
            e2[var] += 1
            out.append(SymbolTerm(self.coeff * (2 * self.s_exp), e2[:n], e2[n:], self.s_exp - 1))
        return out

    def adjoint(self) -> "SymbolTerm":
        return SymbolTerm(self.coeff.conj().T, self.beta, self.alpha, self.s_exp.conjugate())

    def scaled(self, c) -> "SymbolTerm":
        return SymbolTerm(np.asarray(c) * self.coeff, self.beta, self.alpha, self.s_exp)

    def times(self, other: "SymbolTerm") -> "SymbolTerm":
        e = tuple(a + b for a, b in zip(self.exponents, other.exponents))
        n = self.n
        return SymbolTerm(self.coeff @ other.coeff, e[:n], e[n:], self.s_exp + other.s_exp)

    def __repr__(self):
        return f"SymbolTerm(beta={self.beta}, alpha={self.alpha}, s={self.s_exp}, coeff={self.coeff.tolist()})"


def merge_terms(terms: Sequence[SymbolTerm], rtol: float = 1e-14) -> list:
    """Collect like terms and drop cancelled ones."""
    acc: dict = {}
    order = []
    scale = 0.0
    for t in terms:
        k = t.key()
        scale = max(scale, float(np.max(np.abs(t.coeff))))
        if k in acc:
            acc[k] = SymbolTerm(acc[k].coeff + t.coeff, t.beta, t.alpha, acc[k].s_exp)
        else:
            acc[k] = t
            order.append(k)
    out = []
    for k in order:
        t = acc[k]
        if np.max(np.abs(t.coeff)) > rtol * scale:
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# sphere grids and excision


class SphereGrid:
    """Quadrature nodes on the unit sphere of ``R^(2n)``.

    Attributes
    ----------
    nodes : ndarray, shape (M, 2n)
    weights : ndarray, shape (M,)
    uniform : bool
        True for the equispaced circle (``n = 1``), which supports spectral
        interpolation and differentiation.
    """

    def __init__(self, n: int, nodes: np.ndarray, weights: np.ndarray, uniform: bool = False):
        self.n = n
        self.nodes = nodes
        self.weights = weights
        self.uniform = uniform

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def angles(self) -> np.ndarray:
        if not self.uniform:
            raise GridResolution("angles are only defined on the uniform circle grid")
        return 2 * np.pi * np.arange(self.size) / self.size

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(self.weights, values, axes=(0, 0))

    def __eq__(self, other):
        return (
            isinstance(other, SphereGrid)
            and self.n == other.n
            and self.size == other.size
            and self.uniform == other.uniform
        )

    def __hash__(self):
        return hash((self.n, self.size, self.uniform))


_GRID_CACHE: dict = {}


def sphere_grid(n: int, size=None) -> SphereGrid:
    """Default quadrature grid on ``S^(2n-1)``.

    For ``n = 1`` this is the equispaced circle with ``size`` nodes (256 by
    default).  For ``n = 2`` Hopf coordinates are used: Gauss-Legendre in the
    polar angle and trapezoidal in the two phases; ``size`` is the pair
    ``(m_eta, m_phi)``.
    """
    key = (n, size if not isinstance(size, list) else tuple(size))
    if key in _GRID_CACHE:
        return _GRID_CACHE[key]
    if n == 1:
        m = int(size or 256)
        phi = 2 * np.pi * np.arange(m) / m
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        grid = SphereGrid(1, nodes, np.full(m, 2 * np.pi / m), uniform=True)
    elif n == 2:
        m_eta, m_phi = size or (24, 48)
        t, w = np.polynomial.legendre.leggauss(m_eta)
        eta = (t + 1) * np.pi / 4
        w_eta = w * np.pi / 4 * np.sin(eta) * np.cos(eta)
        phi = 2 * np.pi * np.arange(m_phi) / m_phi
        E, P1, P2 = np.meshgrid(eta, phi, phi, indexing="ij")
        W = np.broadcast_to(w_eta[:, None, None], E.shape) * (2 * np.pi / m_phi) ** 2
        nodes = np.stack(
            [np.cos(E) * np.cos(P1), np.cos(E) * np.sin(P1), np.sin(E) * np.cos(P2), np.sin(E) * np.sin(P2)],
            axis=-1,
        ).reshape(-1, 4)
        grid = SphereGrid(2, nodes, W.reshape(-1).copy())
    else:
        raise DimensionMismatch("only n = 1 and n = 2 are supported")
    _GRID_CACHE[key] = grid
    return grid


def smoothstep(t: np.ndarray, k: int = 3) -> np.ndarray:
    """Polynomial smoothstep of degree ``2k + 1`` clamped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    out = np.zeros_like(t)
    for i in range(k + 1):
        out += math.comb(k + i, i) * math.comb(2 * k + 1, k - i) * (-t) ** i
    return out * t ** (k + 1)


@dataclass(frozen=True)
class ExcisionProfile:
    """Radial excision ``chi(rho)``: 0 below ``r0``, 1 above ``r1``.

    The transition is the degree ``2 * smoothness + 1`` smoothstep, which is
    ``C^smoothness`` at both ends.
    """

    r0: float = 0.5
    r1: float = 1.0
    smoothness: int = 3

    def __post_init__(self):
        if not (0.0 < self.r0 < self.r1) or not np.isfinite(self.r1):
            raise InvalidExcision(f"need 0 < r0 < r1, got r0={self.r0}, r1={self.r1}")
        if self.smoothness < 1:
            raise InvalidExcision("smoothness must be at least 1")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return smoothstep((r - self.r0) / (self.r1 - self.r0), self.smoothness)

    @property
    def breakpoints(self) -> tuple:
        return (self.r0, self.r1)


# ---------------------------------------------------------------------------
# components


class HomogeneousComponent:
    """Homogeneous component stored as a finite sum of ``SymbolTerm``."""

    rep = "ring"

    def __init__(self, degree, terms: Sequence[SymbolTerm], n: int, q: int, check: bool = True):
        self.degree = _as_complex(degree)
        self.n = int(n)
        self.q = int(q)
        terms = merge_terms(terms)
        if check:
            for t in terms:
                if t.n != self.n or t.q != self.q:
                    raise DimensionMismatch("term shape does not match component")
                if not _same_degree(t.degree, self.degree):
                    raise DegreeMismatch(f"term of degree {t.degree} in component of degree {self.degree}")
        self.terms = terms

    @classmethod
    def zero(cls, degree, n: int, q: int) -> "HomogeneousComponent":
        return cls(degree, [], n, q)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_smooth(self) -> bool:
        return all(t.is_smooth for t in self.terms)

    def evaluate(self, points) -> np.ndarray:
        pts = as_points(points, self.n)
        out = np.zeros((pts.shape[0], self.q, self.q), dtype=complex)
        for t in self.terms:
            out += t.evaluate(pts)
        return out

    __call__ = evaluate

    def derivative(self, var: int) -> "HomogeneousComponent":
        terms = []
        for t in self.terms:
            terms.extend(t.derivative(var))
        return HomogeneousComponent(self.degree - 1, terms, self.n, self.q, check=False)

    def partial(self, multi: Sequence[int]) -> "HomogeneousComponent":
        out = self
        for v, k in enumerate(multi):
            for _ in range(k):
                out = out.derivative(v)
        return out

    def scale(self, c) -> "HomogeneousComponent":
        return HomogeneousComponent(self.degree, [t.scaled(c) for t in self.terms], self.n, self.q, check=False)

    def adjoint(self) -> "HomogeneousComponent":
        return HomogeneousComponent(self.degree.conjugate(), [t.adjoint() for t in self.terms], self.n, self.q)

    def times(self, other: "HomogeneousComponent") -> "HomogeneousComponent":
        terms = [a.times(b) for a in self.terms for b in other.terms]
        return HomogeneousComponent(self.degree + other.degree, terms, self.n, self.q, check=False)

    def plus(self, other: "HomogeneousComponent") -> "HomogeneousComponent":
        if not _same_degree(self.degree, other.degree):
            raise DegreeMismatch(f"cannot add degrees {self.degree} and {other.degree}")
        return HomogeneousComponent(self.degree, self.terms + other.terms, self.n, self.q, check=False)

    def __repr__(self):
        return f"HomogeneousComponent(degree={self.degree}, terms={len(self.terms)})"


class GridComponent:
    """Homogeneous component sampled on a sphere grid.

    ``values[i]`` is the component at ``grid.nodes[i]``; elsewhere it is
    extended by homogeneity ``f(r w) = r^degree f(w)``.

    Parameters
    ----------
    degree : complex
    values : ndarray, shape (M, q, q)
    grid : SphereGrid
    jet_order : int
        Number of further differentiations that remain trustworthy.
    noise_floor : float
        Absolute level below which Fourier coefficients are discarded before
        differentiating.
    """

    rep = "grid"

    def __init__(self, degree, values: np.ndarray, grid: SphereGrid, jet_order: int = UNLIMITED_JETS,
                 noise_floor: float = 0.0):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 3 or values.shape[0] != grid.size:
            raise DimensionMismatch("values must have shape (grid.size, q, q)")
        self.degree = _as_complex(degree)
        self.values = values
        self.grid = grid
        self.n = grid.n
        self.q = values.shape[1]
        self.jet_order = int(jet_order)
        self.noise_floor = float(noise_floor)
        self._coef = None

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    is_smooth = False

    def _require_circle(self):
        if not self.grid.uniform:
            raise GridResolution("interpolation on grid components requires n = 1")

    def fourier(self) -> np.ndarray:
        """Filtered discrete Fourier coefficients along the circle."""
        if self._coef is None:
            self._require_circle()
            m = self.grid.size
            c = np.fft.fft(self.values, axis=0) / m
            mag = np.max(np.abs(c), axis=(1, 2))
            thresh = max(self.noise_floor, 1e-14 * float(mag.max(initial=0.0)))
            c[mag <= thresh] = 0.0
            self._coef = c
        return self._coef

    def _angle_values(self, phi: np.ndarray, deriv: int = 0) -> np.ndarray:
        c = self.fourier()
        m = self.grid.size
        k = np.fft.fftfreq(m, 1.0 / m)
        if m % 2 == 0:
            nyq = c[m // 2].copy()
            c = c.copy()
            c[m // 2] = 0.0
        fac = (1j * k) ** deriv
        E = np.exp(1j * np.outer(phi, k)) * fac[None, :]
        out = np.tensordot(E, c, axes=(1, 0))
        if m % 2 == 0 and deriv == 0:
            out += np.cos(m // 2 * phi)[:, None, None] * nyq[None]
        return out

    def evaluate(self, points) -> np.ndarray:
        self._require_circle()
        pts = as_points(points, 1)
        r = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(r == 0.0):
            raise ZeroPoint("grid component evaluated at the origin")
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        return complex_rpow(r, self.degree)[:, None, None] * self._angle_values(phi)

    __call__ = evaluate

    def angular_derivative(self) -> np.ndarray:
        """``d/dphi`` of the sphere values by spectral differentiation."""
        c = self.fourier()
        m = self.grid.size
        k = np.fft.fftfreq(m, 1.0 / m)
        if m % 2 == 0:
            k[m // 2] = 0.0
        return np.fft.ifft(c * (1j * k)[:, None, None], axis=0) * m

    def derivative(self, var: int) -> "GridComponent":
        if self.jet_order <= 0:
            raise JetExhausted("no differentiations left on grid component")
        self._require_circle()
        phi = self.grid.angles
        g = self.values
        dg = self.angular_derivative()
        cs, sn = np.cos(phi)[:, None, None], np.sin(phi)[:, None, None]
        mu = self.degree
        if var == 0:
            new = mu * cs * g - sn * dg
        elif var == 1:
            new = mu * sn * g + cs * dg
        else:
            raise DimensionMismatch("n = 1 has coordinates 0 and 1 only")
        return GridComponent(mu - 1, new, self.grid, self.jet_order - 1, self.noise_floor)

    def partial(self, multi: Sequence[int]) -> "GridComponent":
        out = self
        for v, k in enumerate(multi):
            for _ in range(k):
                out = out.derivative(v)
        return out

    def jets(self, order: int) -> dict:
        """All ``d_x^b d_xi^a`` restricted to the sphere with ``a + b <= order``."""
        if order > self.jet_order:
            raise JetExhausted(f"requested {order} derivatives, budget is {self.jet_order}")
        out = {}
        row = self
        for b in range(order + 1):
            col = row
            for a in range(order + 1 - b):
                out[(b, a)] = col.values
                if a < order - b:
                    col = col.derivative(1)
            if b < order:
                row = row.derivative(0)
        return out

    def scale(self, c) -> "GridComponent":
        return GridComponent(self.degree, np.asarray(c) * self.values, self.grid, self.jet_order, self.noise_floor)

    def adjoint(self) -> "GridComponent":
        return GridComponent(self.degree.conjugate(), np.conj(np.swapaxes(self.values, 1, 2)), self.grid,
                             self.jet_order, self.noise_floor)

    def resample(self, grid: SphereGrid) -> "GridComponent":
        if grid == self.grid:
            return self
        self._require_circle()
        vals = self._angle_values(grid.angles)
        return GridComponent(self.degree, vals, grid, self.jet_order, self.noise_floor)

    def __repr__(self):
        return f"GridComponent(degree={self.degree}, nodes={self.grid.size}, jets={self.jet_order})"


def to_grid(c, grid: SphereGrid) -> GridComponent:
    if isinstance(c, GridComponent):
        return c.resample(grid)
    return GridComponent(c.degree, c.evaluate(grid.nodes), grid)


def _common_grid(*comps) -> SphereGrid:
    grids = [c.grid for c in comps if isinstance(c, GridComponent)]
    return max(grids, key=lambda g: g.size)


def comp_mul(a, b):
    """Pointwise (matrix) product of two components."""
    if a.is_zero or b.is_zero:
        return HomogeneousComponent.zero(a.degree + b.degree, a.n, a.q)
    if a.rep == "ring" and b.rep == "ring":
        return a.times(b)
    grid = _common_grid(a, b)
    ga, gb = to_grid(a, grid), to_grid(b, grid)
    return GridComponent(a.degree + b.degree, ga.values @ gb.values, grid, min(ga.jet_order, gb.jet_order),
                         max(ga.noise_floor, gb.noise_floor))


def comp_add(a, b):
    if not _same_degree(a.degree, b.degree):
        raise DegreeMismatch(f"cannot add degrees {a.degree} and {b.degree}")
    if b.is_zero:
        return a
    if a.is_zero:
        return b
    if a.rep == "ring" and b.rep == "ring":
        return a.plus(b)
    grid = _common_grid(a, b)
    ga, gb = to_grid(a, grid), to_grid(b, grid)
    return GridComponent(a.degree, ga.values + gb.values, grid, min(ga.jet_order, gb.jet_order),
                         max(ga.noise_floor, gb.noise_floor))


def comp_sum(degree, parts: Sequence, n: int, q: int):
    out = HomogeneousComponent.zero(degree, n, q)
    for p in parts:
        out = comp_add(out, p)
    return out


# ---------------------------------------------------------------------------
# full symbols


class FullSymbol:
    """Base class of globally defined symbols used as exact evaluators."""

    n: int
    q: int
    name: str = "full"
    # beyond this radius the homogeneous expansion may replace the full
    # symbol in radial integrals (None means no such shortcut)
    asymptotic_radius = None

    def evaluate(self, points, deriv=None) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def supports(self, deriv) -> bool:
        return deriv is None or not any(deriv)

    def __call__(self, points, deriv=None):
        return self.evaluate(points, deriv)


class RingFull(FullSymbol):
    """Finite sum of terms of mixed degree, e.g. a polynomial symbol."""

    name = "ring"

    def __init__(self, terms: Sequence[SymbolTerm], n: int, q: int):
        self.n, self.q = int(n), int(q)
        self.terms = merge_terms(terms)

    @property
    def is_polynomial(self) -> bool:
        return all(t.is_smooth for t in self.terms)

    def max_exponent(self, var: int) -> int:
        """Largest power of coordinate ``var`` (rho powers expanded)."""
        out = 0
        for t in self.terms:
            out = max(out, t.exponents[var] + 2 * int(round(t.s_exp.real)))
        return out

    def polynomial_degree_in(self, part: str) -> int:
        """Total degree in ``x`` (part='x') or ``xi`` (part='xi')."""
        if not self.is_polynomial:
            return UNLIMITED_JETS
        n = self.n
        sl = slice(0, n) if part == "x" else slice(n, 2 * n)
        return max((sum(t.exponents[sl]) + 2 * int(round(t.s_exp.real)) for t in self.terms), default=0)

    def derivative(self, var: int) -> "RingFull":
        terms = []
        for t in self.terms:
            terms.extend(t.derivative(var))
        return RingFull(terms, self.n, self.q)

    def partial(self, multi) -> "RingFull":
        out = self
        for v, k in enumerate(multi):
            for _ in range(k):
                out = out.derivative(v)
        return out

    def supports(self, deriv) -> bool:
        return True

    def evaluate(self, points, deriv=None) -> np.ndarray:
        f = self.partial(deriv) if deriv is not None and any(deriv) else self
        pts = as_points(points, self.n)
        out = np.zeros((pts.shape[0], self.q, self.q), dtype=complex)
        for t in f.terms:
            out += t.evaluate(pts)
        return out

    def times(self, other: "RingFull") -> "RingFull":
        return RingFull([a.times(b) for a in self.terms for b in other.terms], self.n, self.q)

    def plus(self, other: "RingFull") -> "RingFull":
        return RingFull(self.terms + other.terms, self.n, self.q)

    def scale(self, c) -> "RingFull":
        return RingFull([t.scaled(c) for t in self.terms], self.n, self.q)

    def adjoint(self) -> "RingFull":
        return RingFull([t.adjoint() for t in self.terms], self.n, self.q)

    def order(self) -> complex:
        if not self.terms:
            return 0.0
        return max((t.degree for t in self.terms), key=lambda d: d.real)

    def components(self, order=None) -> list:
        """Split into homogeneous components of degree ``order - j``."""
        m = complex(self.order() if order is None else order)
        groups: dict = {}
        for t in self.terms:
            j = m - t.degree
            if abs(j.imag) > DEGREE_TOL or abs(j.real - round(j.real)) > DEGREE_TOL or round(j.real) < 0:
                raise DegreeMismatch(f"term degree {t.degree} is not order - j for integer j >= 0")
            groups.setdefault(int(round(j.real)), []).append(t)
        depth = max(groups) + 1 if groups else 1
        return [HomogeneousComponent(m - j, groups.get(j, []), self.n, self.q) for j in range(depth)]


class CallableFull(FullSymbol):
    """Full symbol given by a vectorised function of the points."""

    def __init__(self, func: Callable, n: int, q: int, name: str = "callable", derivative: Callable | None = None):
        self.func = func
        self.n, self.q = int(n), int(q)
        self.name = name
        self._derivative = derivative

    def supports(self, deriv) -> bool:
        return deriv is None or not any(deriv) or self._derivative is not None

    def evaluate(self, points, deriv=None) -> np.ndarray:
        pts = as_points(points, self.n)
        if deriv is not None and any(deriv):
            if self._derivative is None:
                raise InvalidSymbol(f"{self.name} has no derivative evaluator")
            return np.asarray(self._derivative(pts, tuple(deriv)), dtype=complex)
        return np.asarray(self.func(pts), dtype=complex).reshape(pts.shape[0], self.q, self.q)


# ---------------------------------------------------------------------------
# classical symbols


class ClassicalSymbol:
    """Classical Shubin symbol ``a ~ sum_j a_(order - j)``.

    Parameters
    ----------
    order : complex
    components : list
        ``components[j]`` has degree ``order - j``.
    n, q : int
    exact : FullSymbol, optional
        Global evaluator of the full symbol.
    excision : ExcisionProfile, optional
        Profile used to glue the components when ``exact`` is absent.
    complete : bool
        True when every component beyond the stored ones vanishes.
    """

    def __init__(self, order, components: Sequence, n: int | None = None, q: int | None = None,
                 exact: FullSymbol | None = None, excision: ExcisionProfile | None = None,
                 complete: bool = False, name: str | None = None):
        components = list(components)
        if not components:
            raise InvalidSymbol("a classical symbol needs at least one component")
        self.order = _as_complex(order)
        self.n = int(n if n is not None else components[0].n)
        self.q = int(q if q is not None else components[0].q)
        for j, c in enumerate(components):
            if c.n != self.n or c.q != self.q:
                raise DimensionMismatch(f"component {j} has shape (n={c.n}, q={c.q})")
            if not _same_degree(c.degree, self.order - j):
                raise DegreeMismatch(f"component {j} has degree {c.degree}, expected {self.order - j}")
        if exact is not None and (exact.n != self.n or exact.q != self.q):
            raise DimensionMismatch("exact evaluator shape does not match")
        self.components = components
        self.exact = exact
        self.excision = excision or ExcisionProfile()
        self.complete = bool(complete)
        self.name = name

    @classmethod
    def from_ring(cls, full: RingFull, name: str | None = None, order=None) -> "ClassicalSymbol":
        comps = full.components(order)
        exact = full if full.is_polynomial else None
        return cls(comps[0].degree, comps, full.n, full.q, exact=exact, complete=True, name=name)

    @property
    def depth(self) -> int:
        return len(self.components)

    @property
    def principal(self):
        return self.components[0]

    def available(self, j: int) -> bool:
        return j < self.depth or self.complete

    def component(self, j: int):
        if j < self.depth:
            return self.components[j]
        if self.complete:
            return HomogeneousComponent.zero(self.order - j, self.n, self.q)
        raise InsufficientExpansion(f"component {j} requested, only {self.depth} available")

    def max_depth(self, requested: int | None = None) -> int:
        if requested is None:
            return self.depth
        if requested > self.depth and not self.complete:
            raise InsufficientExpansion(f"depth {requested} requested, only {self.depth} available")
        return requested

    @property
    def is_ring(self) -> bool:
        return all(c.rep == "ring" for c in self.components)

    def ring_full(self) -> RingFull | None:
        """Exact polynomial form if the symbol is one."""
        if isinstance(self.exact, RingFull):
            return self.exact
        return None

    def truncated(self, depth: int) -> "ClassicalSymbol":
        depth = self.max_depth(depth)
        comps = [self.component(j) for j in range(depth)]
        return ClassicalSymbol(self.order, comps, self.n, self.q, exact=self.exact, excision=self.excision,
                               complete=self.complete and depth >= self.depth, name=self.name)

    def with_excision(self, excision: ExcisionProfile) -> "ClassicalSymbol":
        return ClassicalSymbol(self.order, self.components, self.n, self.q, exact=self.exact, excision=excision,
                               complete=self.complete, name=self.name)

    def without_exact(self) -> "ClassicalSymbol":
        return ClassicalSymbol(self.order, self.components, self.n, self.q, exact=None, excision=self.excision,
                               complete=self.complete, name=self.name)

    def glued(self, points, depth: int | None = None) -> np.ndarray:
        """``sum_j chi(rho) a_j`` over the stored components."""
        pts = as_points(points, self.n)
        depth = self.depth if depth is None else depth
        r = rho(pts)
        chi = self.excision(r)
        out = np.zeros((pts.shape[0], self.q, self.q), dtype=complex)
        live = chi > 0
        if np.any(live):
            sub = pts[live]
            acc = np.zeros((sub.shape[0], self.q, self.q), dtype=complex)
            for j in range(depth):
                c = self.component(j)
                if not c.is_zero:
                    acc += c.evaluate(sub)
            out[live] = chi[live][:, None, None] * acc
        return out

    def eval_full(self, points) -> np.ndarray:
        if self.exact is not None:
            return self.exact.evaluate(as_points(points, self.n))
        return self.glued(points)

    def __repr__(self):
        tag = f" exact={self.exact.name}" if self.exact is not None else ""
        return f"ClassicalSymbol(order={self.order}, depth={self.depth}, n={self.n}, q={self.q}{tag})"


def scalar_identity(n: int = 1, q: int = 1) -> ClassicalSymbol:
    one = RingFull([SymbolTerm(np.eye(q), (0,) * n, (0,) * n)], n, q)
    return ClassicalSymbol.from_ring(one, name="identity")


def poly(coeffs: dict, n: int = 1, q: int = 1) -> RingFull:
    """Build a polynomial ``RingFull`` from ``{(beta, alpha): coeff}``.

    ``beta`` and ``alpha`` are tuples (or ints when ``n = 1``); ``coeff``
    is a scalar (times identity) or a ``q x q`` matrix.
    """
    terms = []
    for (b, a), c in coeffs.items():
        b = (b,) if np.isscalar(b) else tuple(b)
        a = (a,) if np.isscalar(a) else tuple(a)
        c = np.asarray(c, dtype=complex)
        if c.ndim == 0:
            c = c * np.eye(q)
        terms.append(SymbolTerm(c, b, a))
    return RingFull(terms, n, q)
