"""Symbol calculus: composition, adjoint, ellipticity and parametrices.

Composition follows the left (Kohn-Nirenberg) quantization

    (a # b) ~ sum_alpha 1/alpha! d_xi^alpha a * D_x^alpha b,   D_x = -i d_x,

and the term with multi-index ``alpha`` lowers the joint degree by
``2|alpha|``, so component ``k`` of the product collects the triples with
``j + l + 2|alpha| = k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidSector,
    NotElliptic,
    TruncationMismatch,
    UnsupportedSymbol,
)
from .symring import (
    UNLIMITED_JETS,
    ClassicalSymbol,
    FullSymbol,
    GridComponent,
    HomogeneousComponent,
    RingFull,
    SymbolTerm,
    comp_add,
    comp_mul,
    sphere_grid,
)

DEFAULT_DEPTH = 8


def multi_indices(n: int, total: int):
    """Multi-indices of length ``n`` with ``|alpha| == total``."""
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in multi_indices(n - 1, total - first):
            yield (first,) + rest


def factorial_multi(alpha) -> int:
    return math.prod(math.factorial(a) for a in alpha)


class _Derivs:
    """Memoised partial derivatives of the components of one symbol."""

    def __init__(self, sym: ClassicalSymbol):
        self.sym = sym
        self.cache: dict = {}

    def get(self, j: int, multi: tuple):
        key = (j, multi)
        if key not in self.cache:
            if not any(multi):
                self.cache[key] = self.sym.component(j)
            else:
                v = next(i for i, m in enumerate(multi) if m)
                lower = list(multi)
                lower[v] -= 1
                self.cache[key] = self.get(j, tuple(lower)).derivative(v)
        return self.cache[key]


def _xi(alpha, n):
    return (0,) * n + tuple(alpha)


def _x(alpha, n):
    return tuple(alpha) + (0,) * n


class SharpFull(FullSymbol):
    """Exact composition ``A # B`` when the series terminates.

    ``alpha_max`` bounds the multi-indices in the sum; it is finite when
    ``A`` is polynomial in ``xi`` or ``B`` is polynomial in ``x``.
    """

    name = "sharp"

    def __init__(self, left: FullSymbol, right: FullSymbol, alpha_max: int):
        self.left, self.right = left, right
        self.n, self.q = left.n, left.q
        self.alpha_max = int(alpha_max)
        self.asymptotic_radius = left.asymptotic_radius or right.asymptotic_radius

    def evaluate(self, points, deriv=None) -> np.ndarray:
        if deriv is not None and any(deriv):
            raise UnsupportedSymbol("derivatives of a composed full symbol are not available")
        n = self.n
        out = None
        for k in range(self.alpha_max + 1):
            for alpha in multi_indices(n, k):
                fa = self.left.evaluate(points, _xi(alpha, n))
                fb = self.right.evaluate(points, _x(alpha, n))
                term = ((-1j) ** k / factorial_multi(alpha)) * (fa @ fb)
                out = term if out is None else out + term
        return out


def _ring_sharp(A: RingFull, B: RingFull, alpha_max: int) -> RingFull:
    n = A.n
    out = RingFull([], n, A.q)
    for k in range(alpha_max + 1):
        for alpha in multi_indices(n, k):
            fa = A.partial(_xi(alpha, n))
            fb = B.partial(_x(alpha, n))
            out = out.plus(fa.times(fb).scale((-1j) ** k / factorial_multi(alpha)))
    return out


def _exact_sharp(a: ClassicalSymbol, b: ClassicalSymbol):
    """Exact evaluator of ``a # b`` if one can be formed, with series length."""
    A, B = a.exact, b.exact
    if A is None or B is None:
        return None
    xi_deg = A.polynomial_degree_in("xi") if isinstance(A, RingFull) else UNLIMITED_JETS
    x_deg = B.polynomial_degree_in("x") if isinstance(B, RingFull) else UNLIMITED_JETS
    kmax = min(xi_deg, x_deg)
    if kmax >= UNLIMITED_JETS:
        return None
    if isinstance(A, RingFull) and isinstance(B, RingFull):
        return _ring_sharp(A, B, kmax)
    n = a.n
    for k in range(1, kmax + 1):
        for alpha in multi_indices(n, k):
            if not (A.supports(_xi(alpha, n)) and B.supports(_x(alpha, n))):
                return None
    return SharpFull(A, B, kmax)


def _finite_sharp_depth(a: ClassicalSymbol, b: ClassicalSymbol):
    if not (a.complete and b.complete):
        return None
    A, B = a.ring_full(), b.ring_full()
    kmax = min(A.polynomial_degree_in("xi") if A else UNLIMITED_JETS,
               B.polynomial_degree_in("x") if B else UNLIMITED_JETS)
    if kmax >= UNLIMITED_JETS:
        return None
    return a.depth + b.depth - 1 + 2 * kmax


def _default_depth(a: ClassicalSymbol, b: ClassicalSymbol | None = None) -> int:
    syms = [s for s in (a, b) if s is not None]
    limits = [s.depth for s in syms if not s.complete]
    return min(limits) if limits else DEFAULT_DEPTH


def _check_depth(N, syms):
    for s in syms:
        if N > s.depth and not s.complete:
            raise TruncationMismatch(f"depth {N} exceeds the {s.depth} known components of an operand")


def sharp(a: ClassicalSymbol, b: ClassicalSymbol, N: int | None = None) -> ClassicalSymbol:
    """Composition symbol ``a # b`` truncated to ``N`` components.

    Parameters
    ----------
    a, b : ClassicalSymbol
    N : int, optional
        Number of homogeneous components to keep.  Defaults to the full
        (finite) expansion for polynomial input and to the shorter operand
        depth otherwise.

    Returns
    -------
    ClassicalSymbol
        Order ``a.order + b.order``.  The exact evaluator is kept when the
        composition series terminates.
    """
    if a.n != b.n or a.q != b.q:
        raise DimensionMismatch("operands have different (n, q)")
    finite = _finite_sharp_depth(a, b)
    if N is None:
        N = finite if finite is not None else _default_depth(a, b)
    _check_depth(N, (a, b))
    n = a.n
    da, db = _Derivs(a), _Derivs(b)
    comps = []
    for k in range(N):
        acc = HomogeneousComponent.zero(a.order + b.order - k, n, a.q)
        for na in range(k // 2 + 1):
            for alpha in multi_indices(n, na):
                c = (-1j) ** na / factorial_multi(alpha)
                for j in range(k - 2 * na + 1):
                    l = k - 2 * na - j
                    aj, bl = a.component(j), b.component(l)
                    if aj.is_zero or bl.is_zero:
                        continue
                    fa = da.get(j, _xi(alpha, n))
                    fb = db.get(l, _x(alpha, n))
                    if fa.is_zero or fb.is_zero:
                        continue
                    acc = comp_add(acc, comp_mul(fa, fb).scale(c))
        comps.append(acc)
    complete = finite is not None and N >= finite
    return ClassicalSymbol(a.order + b.order, comps, n, a.q, exact=_exact_sharp(a, b), excision=a.excision,
                           complete=complete)


def sharp_power(a: ClassicalSymbol, k: int, N: int | None = None) -> ClassicalSymbol:
    """``a # a # ... # a`` with ``k >= 1`` factors."""
    if k < 1:
        raise ValueError("k must be positive")
    out = a
    for _ in range(k - 1):
        out = sharp(out, a, N)
    return out


def adjoint(a: ClassicalSymbol, N: int | None = None) -> ClassicalSymbol:
    """Symbol of the formal adjoint, ``sum 1/alpha! d_xi^alpha D_x^alpha a^*``."""
    n = a.n
    A = a.ring_full()
    finite = None
    if a.complete and A is not None:
        finite = a.depth + 2 * min(A.polynomial_degree_in("x"), A.polynomial_degree_in("xi"))
    if N is None:
        N = finite if finite is not None else _default_depth(a)
    _check_depth(N, (a,))
    star = ClassicalSymbol(a.order.conjugate(), [c.adjoint() for c in a.components], n, a.q, complete=a.complete)
    d = _Derivs(star)
    comps = []
    for k in range(N):
        acc = HomogeneousComponent.zero(a.order.conjugate() - k, n, a.q)
        for na in range(k // 2 + 1):
            j = k - 2 * na
            if star.component(j).is_zero:
                continue
            for alpha in multi_indices(n, na):
                f = d.get(j, tuple(alpha) + tuple(alpha))
                if not f.is_zero:
                    acc = comp_add(acc, f.scale((-1j) ** na / factorial_multi(alpha)))
        comps.append(acc)
    exact = None
    if A is not None and finite is not None:
        kmax = min(A.polynomial_degree_in("x"), A.polynomial_degree_in("xi"))
        Astar = A.adjoint()
        exact = RingFull([], n, a.q)
        for k in range(kmax + 1):
            for alpha in multi_indices(n, k):
                exact = exact.plus(Astar.partial(tuple(alpha) + tuple(alpha)).scale((-1j) ** k / factorial_multi(alpha)))
    complete = finite is not None and N >= finite
    return ClassicalSymbol(a.order.conjugate(), comps, n, a.q, exact=exact, excision=a.excision, complete=complete)


def symbol_difference(a: ClassicalSymbol, b: ClassicalSymbol, N: int | None = None, grid=None) -> float:
    """Largest sphere-grid deviation between the first ``N`` components."""
    N = N if N is not None else min(a.depth, b.depth)
    grid = grid or sphere_grid(a.n)
    err = 0.0
    for j in range(N):
        ca, cb = a.component(j), b.component(j)
        va = 0.0 if ca.is_zero else _sphere_values(ca, grid)
        vb = 0.0 if cb.is_zero else _sphere_values(cb, grid)
        err = max(err, float(np.max(np.abs(np.asarray(va) - np.asarray(vb)), initial=0.0)))
    return err


def _sphere_values(c, grid) -> np.ndarray:
    if isinstance(c, GridComponent) and c.grid == grid:
        return c.values
    return c.evaluate(grid.nodes)


def principal_restrict(a: ClassicalSymbol, grid=None) -> GridComponent:
    """Principal component sampled on the sphere grid."""
    grid = grid or sphere_grid(a.n)
    c = a.principal
    return GridComponent(c.degree, _sphere_values(c, grid), grid, jet_order=0)


class Check(NamedTuple):
    ok: bool
    margin: float


def is_elliptic(a: ClassicalSymbol, grid=None, tol: float = 1e-9) -> Check:
    """Invertibility of the principal component on the sphere.

    ``margin`` is the smallest singular value over the grid; the test is
    ``margin > tol * (largest singular value)``.
    """
    vals = principal_restrict(a, grid).values
    s = np.linalg.svd(vals, compute_uv=False)
    top = float(s.max())
    margin = float(s.min())
    return Check(top > 0.0 and margin > tol * top, margin)


@dataclass(frozen=True)
class Sector:
    """Closed sector ``{r e^(i phi): theta <= phi <= theta_prime}``.

    ``theta == theta_prime`` describes a single ray.
    """

    theta: float
    theta_prime: float | None = None

    def __post_init__(self):
        tp = self.theta if self.theta_prime is None else self.theta_prime
        if not (np.isfinite(self.theta) and np.isfinite(tp)):
            raise InvalidSector("sector angles must be finite")
        if tp < self.theta or tp - self.theta >= 2 * np.pi:
            raise InvalidSector(f"need theta <= theta' < theta + 2 pi, got {self.theta}, {tp}")
        object.__setattr__(self, "theta_prime", float(tp))

    @property
    def width(self) -> float:
        return self.theta_prime - self.theta

    def distance(self, mu: np.ndarray) -> np.ndarray:
        """Euclidean distance from the points ``mu`` to the sector."""
        mu = np.asarray(mu, dtype=complex)
        r = np.abs(mu)
        rel = np.mod(np.angle(mu) - self.theta, 2 * np.pi)
        inside = rel <= self.width + 1e-15
        d = np.empty(mu.shape)
        for ang in (self.theta, self.theta_prime):
            diff = np.abs(np.angle(mu * np.exp(-1j * ang)))
            di = np.where(diff < np.pi / 2, r * np.sin(diff), r)
            d = di if ang == self.theta else np.minimum(d, di)
        return np.where(inside, 0.0, d)

    def contains(self, mu) -> np.ndarray:
        return self.distance(mu) == 0.0


def principal_eigenvalues(a: ClassicalSymbol, grid=None) -> np.ndarray:
    return np.linalg.eigvals(principal_restrict(a, grid).values)


def is_lambda_elliptic(a: ClassicalSymbol, sector: Sector, grid=None, tol: float = 1e-9) -> Check:
    """Whether ``lambda - a_m`` stays invertible for ``lambda`` in the sector.

    ``margin`` is the distance of the principal eigenvalues on the sphere to
    the sector; the test is ``margin > tol * (largest modulus)``.
    """
    ev = principal_eigenvalues(a, grid)
    top = float(np.abs(ev).max())
    margin = float(sector.distance(ev).min())
    return Check(top > 0.0 and margin > tol * top, margin)


def _radial_inverse(c: HomogeneousComponent, rng_seed: int = 7):
    """Inverse of a component of the form ``C * rho^mu`` as a ring element."""
    if c.rep != "ring" or c.is_zero:
        return None
    n = c.n
    rng = np.random.default_rng(rng_seed)
    pts = rng.normal(size=(6, 2 * n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    vals = c.evaluate(pts)
    C = vals[0]
    if not np.allclose(vals, C[None], rtol=1e-13, atol=1e-13 * np.abs(C).max()):
        return None
    try:
        Ci = np.linalg.inv(C)
    except np.linalg.LinAlgError:
        return None
    term = SymbolTerm(Ci, (0,) * n, (0,) * n, -c.degree / 2)
    return HomogeneousComponent(-c.degree, [term], n, c.q)


def pointwise_inverse(c, grid=None):
    """Inverse of an elliptic component, exact when it is radial."""
    inv = _radial_inverse(c)
    if inv is not None:
        return inv
    if c.n != 1:
        raise UnsupportedSymbol("non-radial principal components need n = 1")
    grid = grid or (c.grid if isinstance(c, GridComponent) else sphere_grid(1))
    vals = _sphere_values(c, grid)
    jets = c.jet_order if isinstance(c, GridComponent) else UNLIMITED_JETS
    return GridComponent(-c.degree, np.linalg.inv(vals), grid, jets)


def parametrix(a: ClassicalSymbol, N: int | None = None, grid=None) -> ClassicalSymbol:
    """Components of ``b`` with ``a # b = 1`` modulo order ``-order - N``.

    The same components give ``b # a = 1`` since left and right
    parametrices agree modulo smoothing symbols.
    """
    chk = is_elliptic(a, grid)
    if not chk.ok:
        raise NotElliptic(f"principal component not invertible (margin {chk.margin:.3e})")
    N = N if N is not None else _default_depth(a)
    n = a.n
    b0 = pointwise_inverse(a.principal, grid)
    comps = [b0]
    da = _Derivs(a)
    bsym_cache: dict = {}

    def bder(l, multi):
        key = (l, multi)
        if key not in bsym_cache:
            if not any(multi):
                bsym_cache[key] = comps[l]
            else:
                v = next(i for i, m in enumerate(multi) if m)
                lower = list(multi)
                lower[v] -= 1
                bsym_cache[key] = bder(l, tuple(lower)).derivative(v)
        return bsym_cache[key]

    for k in range(1, N):
        acc = HomogeneousComponent.zero(-k, n, a.q)
        for na in range(k // 2 + 1):
            for alpha in multi_indices(n, na):
                c = (-1j) ** na / factorial_multi(alpha)
                for j in range(k - 2 * na + 1):
                    l = k - 2 * na - j
                    if l == k:
                        continue
                    if a.component(j).is_zero:
                        continue
                    fa = da.get(j, _xi(alpha, n))
                    fb = bder(l, _x(alpha, n))
                    if fa.is_zero or fb.is_zero:
                        continue
                    acc = comp_add(acc, comp_mul(fa, fb).scale(c))
        comps.append(comp_mul(b0, acc).scale(-1.0))
    return ClassicalSymbol(-a.order, comps, n, a.q, excision=a.excision)
