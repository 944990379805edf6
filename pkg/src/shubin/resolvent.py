"""Contours and the symbol of the resolvent.

Conventions
-----------
Weights returned by :func:`contour_nodes` already contain ``1 / (2 pi i)``,
so ``sum(w * f(lam) / (lam - c))`` approximates ``f(c)`` for ``c`` enclosed
by the contour.

``keyhole`` (branch ray ``theta``)
    in along ``arg = theta`` from ``R`` to ``eps``, clockwise around the
    circle of radius ``eps`` to ``arg = theta - 2 pi``, out to ``R``.  The
    power ``lam^z = |lam|^z exp(i z arg)`` uses the argument carried by each
    node, so ``arg`` ranges over ``(theta - 2 pi, theta)``.
``sector`` (``theta < theta'``)
    out along ``theta``, in along ``theta'`` and clockwise along the small
    arc back to ``theta``.  It winds once around every point of the sector
    swept counterclockwise from ``theta`` to ``theta'`` outside the disc of
    radius ``eps``.

Resolvent parametrix
--------------------
With ``a ~ sum_p a_(m-p)`` the components of ``b(lambda) ~ (lambda - a)^(-#)``
are

    b_0 = (lambda - a_m)^(-1)
    b_k = sum_{j + 2|s| + p = k, j < k} 1/s! d_xi^s b_j * D_x^s a_(m-p) * b_0.

Only ``xi``-derivatives of the ``b_j`` enter, so the recursion runs on
truncated Taylor series in ``xi`` (plus ``x`` when full jets are wanted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _engine
from .calculus import Sector, multi_indices, factorial_multi
from .errors import ContourConvergence, InvalidBranch, InvalidSector, UnsupportedSymbol
from .symring import ClassicalSymbol, HomogeneousComponent, RingFull, SymbolTerm, as_points

GL_NODES = 16
MAX_PANELS = 160


# ---------------------------------------------------------------------------
# contours


@dataclass(frozen=True)
class ContourSpec:
    """Description of an integration contour.

    Parameters
    ----------
    kind : {"keyhole", "sector"}
    theta, theta_prime : float
        Branch ray, or the two bounding rays of a sector.
    eps : float
        Radius of the small arc.
    panels : int, optional
        Number of dyadic panels per ray (``R = eps * 2**panels``).  Chosen
        from the decay of the integrand when omitted.
    gl : int
        Gauss-Legendre nodes per panel.
    arc_panels : int
        Panels on the small arc.
    tail : int
        When positive, the rays stop at ``R`` and the rest of each ray is
        replaced by ``tail`` nodes on the circle ``|lambda| = R``.  Their
        weights integrate the Laurent expansion of the integrand at infinity
        exactly, which requires the integrand to be holomorphic outside the
        circle and to vanish there like ``1/lambda^2``.
    """

    kind: str = "keyhole"
    theta: float = np.pi
    theta_prime: float | None = None
    eps: float = 0.25
    panels: int | None = None
    gl: int = GL_NODES
    arc_panels: int = 8
    tail: int = 0

    def __post_init__(self):
        if self.kind not in ("keyhole", "sector"):
            raise InvalidSector(f"unknown contour kind {self.kind!r}")
        if not self.eps > 0:
            raise InvalidSector("eps must be positive")
        if self.kind == "sector":
            Sector(self.theta, self.theta_prime)
            if self.theta_prime is None or self.theta_prime <= self.theta:
                raise InvalidSector("a sector contour needs theta < theta'")

    def with_panels(self, panels: int) -> "ContourSpec":
        return ContourSpec(self.kind, self.theta, self.theta_prime, self.eps, panels, self.gl, self.arc_panels,
                           self.tail)

    @property
    def radius(self) -> float:
        return self.eps * 2.0 ** (self.panels or 0)

    def rays(self) -> list:
        """``(arg, direction)`` of each ray; direction ``+1`` runs outwards."""
        if self.kind == "keyhole":
            return [(self.theta, -1.0), (self.theta - 2 * np.pi, 1.0)]
        return [(self.theta, 1.0), (self.theta_prime, -1.0)]


@dataclass
class ContourNodes:
    """Quadrature nodes ``lam`` with branch arguments and weights."""

    lam: np.ndarray
    arg: np.ndarray
    weights: np.ndarray
    spec: ContourSpec
    segment: np.ndarray = field(default=None)

    @property
    def size(self) -> int:
        return self.lam.shape[0]

    def power(self, z) -> np.ndarray:
        """``lam^z`` on the branch carried by the nodes.

        On tail nodes the entry is instead the weight that integrates
        ``lam^z g(lam)`` along the ray ends from the samples of ``g`` on the
        tail circle.
        """
        z = complex(z)
        out = np.exp(z * (np.log(np.abs(self.lam)) + 1j * self.arg))
        tail = self.segment == TAIL_SEGMENT
        if np.any(tail):
            out[tail] = self._tail_weights(z, self.lam[tail])
        return out

    def _tail_weights(self, z: complex, lam: np.ndarray) -> np.ndarray:
        # g = sum_{j >= 2} c_j lam^-j with c_j = mean(g lam^j) over the
        # circle (c_1 = 0 since the 1/lam pole is subtracted), and the ray
        # integral of lam^(z - j) beyond R is closed form
        M = lam.size
        R = float(np.abs(lam[0]))
        e = lam / R
        j = np.arange(2, M + 1)
        s = z - j + 1
        if np.any(s.real >= 0):
            raise ContourConvergence("the tail needs Re z < 1")
        t = np.zeros(j.size, dtype=complex)
        for phi, direction in self.spec.rays():
            t += -direction * np.exp(1j * s * phi) / s
        w = (e[:, None] ** j[None, :]) @ t
        return np.exp((z + 1) * math.log(R)) * w / (M * 2j * np.pi)

    def integrate(self, values) -> complex:
        return np.tensordot(self.weights, values, axes=(0, 0))

    def subset(self, mask) -> "ContourNodes":
        return ContourNodes(self.lam[mask], self.arg[mask], self.weights[mask], self.spec, self.segment[mask])


TAIL_SEGMENT = 3


def _gl(n):
    return np.polynomial.legendre.leggauss(n)


def _ray(theta, eps, panels, gl, outward):
    t, w = _gl(gl)
    r_list, w_list = [], []
    for i in range(panels):
        a, b = eps * 2.0**i, eps * 2.0 ** (i + 1)
        r_list.append((b - a) / 2 * t + (a + b) / 2)
        w_list.append((b - a) / 2 * w)
    r = np.concatenate(r_list)
    wr = np.concatenate(w_list)
    d = np.exp(1j * theta)
    sgn = 1.0 if outward else -1.0
    return r * d, sgn * d * wr


def _arc(eps, phi_from, phi_to, panels, gl):
    # traversal from phi_from to phi_to (either direction)
    t, w = _gl(gl)
    edges = np.linspace(phi_from, phi_to, panels + 1)
    ph, wp = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ph.append((b - a) / 2 * t + (a + b) / 2)
        wp.append((b - a) / 2 * w)
    ph = np.concatenate(ph)
    wp = np.concatenate(wp)
    lam = eps * np.exp(1j * ph)
    return lam, 1j * lam * wp, ph


def contour_nodes(spec: ContourSpec) -> ContourNodes:
    """Nodes, branch arguments and weights (including ``1/(2 pi i)``)."""
    panels = spec.panels if spec.panels is not None else 40
    th = spec.theta
    if spec.kind == "keyhole":
        lam_in, w_in = _ray(th, spec.eps, panels, spec.gl, outward=False)
        lam_arc, w_arc, ph = _arc(spec.eps, th, th - 2 * np.pi, spec.arc_panels, spec.gl)
        lam_out, w_out = _ray(th, spec.eps, panels, spec.gl, outward=True)
        lam = np.concatenate([lam_in, lam_arc, lam_out])
        arg = np.concatenate([np.full(lam_in.size, th), ph, np.full(lam_out.size, th - 2 * np.pi)])
        w = np.concatenate([w_in, w_arc, w_out])
        seg = np.concatenate([np.zeros(lam_in.size, int), np.ones(lam_arc.size, int), np.full(lam_out.size, 2)])
    else:
        tp = spec.theta_prime
        lam_out, w_out = _ray(th, spec.eps, panels, spec.gl, outward=True)
        lam_in, w_in = _ray(tp, spec.eps, panels, spec.gl, outward=False)
        lam_arc, w_arc, ph = _arc(spec.eps, tp, th, spec.arc_panels, spec.gl)
        lam = np.concatenate([lam_out, lam_in, lam_arc])
        arg = np.concatenate([np.full(lam_out.size, th), np.full(lam_in.size, tp), ph])
        w = np.concatenate([w_out, w_in, w_arc])
        seg = np.concatenate([np.zeros(lam_out.size, int), np.ones(lam_in.size, int), np.full(lam_arc.size, 2)])
    w = w / (2j * np.pi)
    if spec.tail:
        phi = 2 * np.pi * (np.arange(spec.tail) + 0.5) / spec.tail
        lam = np.concatenate([lam, spec.eps * 2.0**panels * np.exp(1j * phi)])
        arg = np.concatenate([arg, phi])
        w = np.concatenate([w, np.ones(spec.tail)])
        seg = np.concatenate([seg, np.full(spec.tail, TAIL_SEGMENT)])
    order = np.argsort(np.abs(lam), kind="stable")
    return ContourNodes(lam[order], arg[order], w[order], spec, seg[order])


def panels_for_decay(spec: ContourSpec, decay: float, scale: float = 1.0, imag: float = 0.0,
                     tol: float = 1e-10) -> int:
    """Dyadic panel count so that the ray tails fall below ``tol``.

    The integrand is assumed to decay like ``scale * |lam|^(decay - 1)``
    with ``decay < 0`` and to carry a branch factor bounded by
    ``exp(2 pi |imag|)``.
    """
    if decay >= 0:
        raise ContourConvergence(f"integrand does not decay (exponent {decay - 1:.3g})")
    amp = 2 * scale * math.exp(2 * math.pi * abs(imag)) / abs(decay)
    for k in range(1, MAX_PANELS + 1):
        R = spec.eps * 2.0**k
        if amp * R**decay < tol:
            return k
    raise ContourConvergence("tail estimate did not reach tolerance")


def panels_for_radius(spec: ContourSpec, radius: float) -> int:
    """Smallest dyadic panel count with ``eps * 2**panels >= radius``."""
    return max(1, int(math.ceil(math.log2(max(radius, 2 * spec.eps) / spec.eps))))


def default_lam_split(A) -> float:
    """``|lambda|`` above which the exact resolvent switches to the asymptotic one."""
    m = max(A.polynomial_degree_in("xi"), A.polynomial_degree_in("x"), 1)
    return 10 * 31.6**m


def check_branch(a: ClassicalSymbol, theta: float, grid=None, tol: float = 1e-9) -> None:
    from .calculus import is_lambda_elliptic

    chk = is_lambda_elliptic(a, Sector(theta), grid, tol)
    if not chk.ok:
        raise InvalidBranch(f"ray arg = {theta:.4f} meets the principal spectrum (margin {chk.margin:.2e})")


def default_eps(a: ClassicalSymbol, grid=None) -> float:
    """Half the smallest principal eigenvalue modulus, capped at 0.5."""
    from .calculus import principal_eigenvalues

    ev = principal_eigenvalues(a, grid)
    return float(min(0.5, 0.5 * np.abs(ev).min()))


# ---------------------------------------------------------------------------
# tapes


class RingSource:
    """Derivative values of a list of ring objects, cached by multi-index."""

    def __init__(self, parts):
        self.parts = list(parts)
        self.cache: dict = {}

    def deriv(self, p: int, multi: tuple):
        key = (p, multi)
        if key not in self.cache:
            if not any(multi):
                self.cache[key] = self.parts[p]
            else:
                v = next(i for i, m in enumerate(multi) if m)
                lower = list(multi)
                lower[v] -= 1
                self.cache[key] = self.deriv(p, tuple(lower)).derivative(v)
        return self.cache[key]

    def is_zero(self, p: int, multi: tuple) -> bool:
        if p >= len(self.parts):
            return True
        obj = self.deriv(p, multi)
        return not obj.terms

    def values(self, p: int, multi: tuple, points: np.ndarray) -> np.ndarray:
        return self.deriv(p, multi).evaluate(points)


def build_recursion(n: int, q: int, K: int, coords: list, source: RingSource, out_order: int = 0,
                    full_route: bool = False, output: str = "components",
                    subtract: bool = True) -> _engine.Tape:
    """Tape computing ``b_0 .. b_(K-1)``.

    Parameters
    ----------
    coords : list of int
        Phase-space coordinates carried as Taylor variables; all ``xi``
        coordinates must be present.
    source : RingSource
        ``source.parts[p]`` is ``a_(m-p)``, or the full symbol when
        ``full_route`` is set (then only ``p = 0`` enters and the ``b_k``
        with odd ``k`` vanish).
    output : {"components", "sum"}
        Accumulate every ``b_k`` separately, or only their sum.
    subtract : bool
        Subtract ``1 / lambda`` from ``b_0`` before accumulating.
    """
    order = out_order + (K - 1) // 2
    space = _engine.TaylorSpace(len(coords), order)
    tape = _engine.Tape(space, q)
    xi_var = [coords.index(n + i) for i in range(n)]
    zero_s = (0,) * n
    b = {0: tape.resolvent(("a", 0, zero_s))}
    dcache = {}

    def dxi(j, s):
        if not any(s):
            return b[j]
        if (j, s) not in dcache:
            i = next(t for t, v in enumerate(s) if v)
            lower = list(s)
            lower[i] -= 1
            dcache[(j, s)] = tape.deriv(dxi(j, tuple(lower)), xi_var[i])
        return dcache[(j, s)]

    loads = {}

    def load(p, s):
        if (p, s) not in loads:
            loads[(p, s)] = tape.load(("a", p, s))
        return loads[(p, s)]

    for k in range(1, K):
        acc = None
        for j in range(k):
            for ns in range((k - j) // 2 + 1):
                p = k - j - 2 * ns
                if full_route and p != 0:
                    continue
                for s in multi_indices(n, ns):
                    if source.is_zero(p, tuple(s) + zero_s):
                        continue
                    if j in b and b[j] is None:
                        continue
                    term = tape.mul(tape.mul(dxi(j, tuple(s)), load(p, tuple(s))), b[0])
                    if acc is None:
                        acc = tape.zero()
                    tape.add_scaled(acc, term, 1.0 / factorial_multi(s))
        b[k] = acc
    if output == "components":
        for k in range(K):
            if b[k] is None:
                b[k] = tape.zero()
            tape.accumulate(b[k], subtract_pole=subtract and k == 0, key=k)
    else:
        total = tape.zero()
        for k in range(K):
            if b[k] is not None:
                tape.add_scaled(total, b[k], 1.0)
        tape.accumulate(total, subtract_pole=subtract, key="sum")
    tape.coords = list(coords)
    tape.n = n
    return tape


def load_consts(tape: _engine.Tape, source: RingSource, points: np.ndarray) -> np.ndarray:
    """Taylor coefficients ``d^g D_x^s a_p / g!`` for every tape constant."""
    space = tape.space
    n = tape.n
    pts = np.asarray(points, dtype=float)
    out = np.zeros((pts.shape[0], len(tape.const_keys), space.size, tape.q, tape.q), dtype=complex)
    fact = space.factorials()
    for ci, (_, p, s) in enumerate(tape.const_keys):
        ns = sum(s)
        for gi, g in enumerate(space.indices):
            multi = list(s) + [0] * n
            for v, e in enumerate(g):
                multi[tape.coords[v]] += e
            multi = tuple(multi)
            if source.is_zero(p, multi):
                continue
            out[:, ci, gi] = source.values(p, multi, pts) * ((-1j) ** ns / fact[gi])
    return out


def _component_parts(a: ClassicalSymbol, K: int) -> list:
    parts = []
    for p in range(K):
        c = a.component(p) if a.available(p) else HomogeneousComponent.zero(a.order - p, a.n, a.q)
        if c.rep != "ring":
            raise UnsupportedSymbol("the resolvent recursion needs ring components")
        parts.append(c)
    return parts


def _diagonal_blocks(term_lists: list, q: int):
    """Split lists of matrix terms into ``q`` scalar lists, or None if any term is not diagonal."""
    if q == 1:
        return None
    for terms in term_lists:
        for t in terms:
            if np.any(t.coeff - np.diag(np.diag(t.coeff))):
                return None
    return [[[SymbolTerm(t.coeff[r, r], t.beta, t.alpha, t.s_exp) for t in terms if t.coeff[r, r] != 0]
             for terms in term_lists] for r in range(q)]


def _scatter_diagonal(blocks: list, q: int) -> np.ndarray:
    out = np.zeros(blocks[0].shape[:-2] + (q, q), dtype=complex)
    for r, b in enumerate(blocks):
        out[..., r, r] = b[..., 0, 0]
    return out


def integrate_components(a: ClassicalSymbol, points, nodes: ContourNodes, fvals: np.ndarray, K: int,
                         backend: str | None = None) -> np.ndarray:
    """``sum_l w_l f(lam_l) (b_k(p, lam_l) - delta_k0 / lam_l)`` for all points.

    Diagonal matrix symbols are processed block by block as scalars.

    Returns
    -------
    ndarray, shape (P, K, q, q)
    """
    n = a.n
    parts = _component_parts(a, K)
    blocks = _diagonal_blocks([c.terms for c in parts], a.q)
    if blocks is not None:
        res = []
        for terms in blocks:
            comps = [HomogeneousComponent(c.degree, t, n, 1) for c, t in zip(parts, terms)]
            res.append(integrate_components(ClassicalSymbol(a.order, comps, n, 1, complete=True), points, nodes,
                                            fvals, K, backend))
        return _scatter_diagonal(res, a.q)
    src = RingSource(parts)
    tape = build_recursion(n, a.q, K, list(range(n, 2 * n)), src, 0)
    pts = as_points(points, n)
    consts = load_consts(tape, src, pts)
    res = _engine.run_tape(tape, consts, nodes.lam, nodes.weights * fvals, backend)
    return res[:, :, 0]


# ---------------------------------------------------------------------------
# jets


@dataclass
class ResolventJet:
    """Jets of the resolvent parametrix components at one point.

    ``jets[k][(beta, alpha)]`` is ``d_x^beta d_xi^alpha b_k`` at
    ``(omega, lam)`` as a ``q x q`` matrix.
    """

    omega: np.ndarray
    lam: complex
    jets: list

    def value(self, k: int) -> np.ndarray:
        n = self.omega.shape[0] // 2
        return self.jets[k][((0,) * n, (0,) * n)]


def resolvent_parametrix_jet(a: ClassicalSymbol, lam: complex, omega, K_comp: int, K_jet: int,
                             backend: str | None = None) -> ResolventJet:
    """Components ``b_0 .. b_(K_comp-1)`` with all derivatives up to ``K_jet``."""
    n = a.n
    pt = as_points(omega, n)
    src = RingSource(_component_parts(a, K_comp))
    tape = build_recursion(n, a.q, K_comp, list(range(2 * n)), src, K_jet, subtract=False)
    consts = load_consts(tape, src, pt)
    res = _engine.run_tape(tape, consts, np.array([lam]), np.array([1.0]), backend)[0]
    space = tape.space
    fact = space.factorials()
    jets = []
    for k in range(K_comp):
        d = {}
        for gi, g in enumerate(space.indices):
            if sum(g) <= K_jet:
                d[(tuple(g[:n]), tuple(g[n:]))] = res[k, gi] * fact[gi]
        jets.append(d)
    return ResolventJet(pt[0], complex(lam), jets)


# ---------------------------------------------------------------------------
# full route and the exact inverse for n = 1


def full_route_integral(A: RingFull, points, nodes: ContourNodes, fvals, R: int, deriv=None,
                        backend: str | None = None) -> np.ndarray:
    """Contour integral of the asymptotic full resolvent ``sum_r b_2r``.

    Uses the full symbol in the recursion (no splitting into components);
    accurate where ``|lam|^(1/m) + |(x, xi)|`` is large.
    """
    n = A.n
    blocks = _diagonal_blocks([A.terms], A.q)
    if blocks is not None:
        return _scatter_diagonal([full_route_integral(RingFull(b[0], n, 1), points, nodes, fvals, R, deriv, backend)
                                  for b in blocks], A.q)
    pts = as_points(points, n)
    deriv = tuple(deriv) if deriv is not None else (0,) * (2 * n)
    coords = sorted(set(range(n, 2 * n)) | {v for v, d in enumerate(deriv) if d})
    src = RingSource([A])
    tape = build_recursion(n, A.q, 2 * R - 1, coords, src, sum(deriv), full_route=True, output="sum")
    consts = load_consts(tape, src, pts)
    res = _engine.run_tape(tape, consts, nodes.lam, nodes.weights * fvals, backend)[:, 0]
    g = tuple(deriv[c] for c in coords)
    gi = tape.space.pos[g]
    return res[:, gi] * math.prod(math.factorial(d) for d in deriv)


def full_route_values(A: RingFull, points, lam, R: int, backend: str | None = None) -> np.ndarray:
    """Unintegrated asymptotic resolvent, shape ``(P, L, q, q)``."""
    n = A.n
    blocks = _diagonal_blocks([A.terms], A.q)
    if blocks is not None:
        return _scatter_diagonal([full_route_values(RingFull(b[0], n, 1), points, lam, R, backend) for b in blocks],
                                 A.q)
    pts = as_points(points, n)
    src = RingSource([A])
    tape = build_recursion(n, A.q, 2 * R - 1, list(range(n, 2 * n)), src, 0, full_route=True, output="sum",
                          subtract=False)
    consts = load_consts(tape, src, pts)
    lam = np.asarray(lam, dtype=complex)
    raw = _engine.run_tape_raw(tape, consts, lam, backend)
    return raw[:, 0, 0]


def cheb(N: int):
    """Chebyshev-Lobatto nodes on [-1, 1] (descending) and the first derivative matrix."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def bary_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric interpolation matrix from Chebyshev-Lobatto ``nodes`` to ``x``."""
    N = nodes.size - 1
    w = (-1.0) ** np.arange(N + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = x[:, None] - nodes[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    M = w[None, :] / diff
    M /= M.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if np.any(rows):
        M[rows] = hit[rows].astype(float)
    return M


class OdeResolvent:
    """Exact ``#``-inverse of ``lambda - a`` integrated along a contour.

    For ``n = 1`` and ``a`` polynomial in ``xi`` of degree ``d`` the equation
    ``(lambda - a) # b = 1`` reads, for each fixed ``xi``,

        sum_alpha 1/alpha! d_xi^alpha (lambda - a) (-i d_x)^alpha b = 1,

    an ODE of order ``d`` in ``x``.  It is solved by Chebyshev collocation on
    ``[-L, L]`` with the ``d/2`` outermost nodes on each side pinned to the
    asymptotic resolvent, for contour nodes with ``|lambda| <= lam_split``.
    Larger ``|lambda|`` use the asymptotic resolvent directly.

    The result is the contour integral of ``b - 1/lambda`` on the tensor
    Chebyshev grid of ``[-L, L]^2``.
    """

    def __init__(self, A: RingFull, nodes: ContourNodes, fvals: np.ndarray, L: float = 10.0, nx: int = 72,
                 nxi: int = 72, lam_split: float | None = None, R: int = 6, backend: str | None = None):
        if A.n != 1 or not A.is_polynomial:
            raise UnsupportedSymbol("the exact resolvent needs a polynomial symbol with n = 1")
        self.A = A
        self.q = A.q
        self.L = float(L)
        self.nx, self.nxi = int(nx), int(nxi)
        self.R = int(R)
        self.d = A.polynomial_degree_in("xi")
        self.lam_split = float(lam_split) if lam_split is not None else default_lam_split(A)
        self.nodes = nodes
        self.fvals = np.asarray(fvals, dtype=complex)
        self.backend = backend
        t, D = cheb(self.nx)
        self.x = self.L * t
        self.Dx = D / self.L
        t, D = cheb(self.nxi)
        self.xi = self.L * t
        self.Dxi = D / self.L
        self._grid = None

    def _diagonal(self) -> bool:
        probe = np.array([[0.3, 0.7], [-1.1, 0.4], [2.0, -0.5]])
        for k in range(self.d + 1):
            v = self.A.evaluate(probe, (0, k))
            off = v - np.einsum("pii->pi", v)[:, :, None] * np.eye(self.q)
            if np.abs(off).max() > 0:
                return False
        return True

    def grid_values(self) -> np.ndarray:
        """Integrated symbol on the grid, shape ``(nxi + 1, nx + 1, q, q)``."""
        if self._grid is None:
            self._grid = self._build()
        return self._grid

    def _build(self) -> np.ndarray:
        q = self.q
        X, XI = np.meshgrid(self.x, self.xi)
        pts = np.stack([X.ravel(), XI.ravel()], axis=1)
        small = np.abs(self.nodes.lam) <= self.lam_split
        G = np.zeros((pts.shape[0], q, q), dtype=complex)
        if np.any(~small):
            big = self.nodes.subset(~small)
            Rb = max(3, min(self.R, 4))
            G += full_route_integral(self.A, pts, big, self.fvals[~small], Rb, backend=self.backend)
        G = G.reshape(self.nxi + 1, self.nx + 1, q, q)
        if np.any(small):
            sub = self.nodes.subset(small)
            fw = sub.weights * self.fvals[small]
            diag = self._diagonal()
            N = self.nx + 1
            nb = self.d // 2
            bidx = np.r_[0:nb, N - nb:N]
            bpts = np.stack([np.tile(self.x[bidx], self.xi.size), np.repeat(self.xi, bidx.size)], axis=1)
            bvals = full_route_values(self.A, bpts, sub.lam, self.R, self.backend).reshape(self.xi.size, bidx.size,
                                                                             sub.lam.size, q, q)
            for k, xi in enumerate(self.xi):
                G[k] += self._solve_xi(xi, sub.lam, fw, diag, bvals[k])
        return G

    def _solve_xi(self, xi: float, lam: np.ndarray, fw: np.ndarray, diag: bool, bvals: np.ndarray) -> np.ndarray:
        """Integrated solution along one ``xi`` row; ``bvals`` holds the pinned boundary values."""
        q, N = self.q, self.nx + 1
        nb = self.d // 2
        bidx = np.r_[0:nb, N - nb:N]
        iidx = np.arange(nb, N - nb)
        pts = np.stack([self.x, np.full(N, xi)], axis=1)
        coefs = [self.A.evaluate(pts, (0, k)) / math.factorial(k) for k in range(self.d + 1)]
        Dk = [np.eye(N)]
        for _ in range(self.d):
            Dk.append(Dk[-1] @ self.Dx)
        out = np.zeros((N, q, q), dtype=complex)
        blocks = [(r, r) for r in range(q)] if diag else [None]
        for blk in blocks:
            if blk is None:
                # full coupled system, unknown layout (node, row)
                K = np.zeros((N * q, N * q), dtype=complex)
                for k in range(self.d + 1):
                    C = scipy.linalg.block_diag(*coefs[k])
                    K += (-1j) ** k * C @ np.kron(Dk[k], np.eye(q))
                gI = np.concatenate([np.arange(i * q, i * q + q) for i in iidx])
                gB = np.concatenate([np.arange(i * q, i * q + q) for i in bidx])
                bB = bvals.transpose(1, 0, 2, 3).reshape(lam.size, bidx.size * q, q)
                rhs0 = np.tile(np.eye(q), (iidx.size, 1))
                sol = self._interior_solve(K[np.ix_(gI, gI)], K[np.ix_(gI, gB)], bB, rhs0, lam)
                vals = np.zeros((lam.size, N * q, q), dtype=complex)
                vals[:, gI] = sol
                vals[:, gB] = bB
                vals = vals.reshape(lam.size, N, q, q)
            else:
                r = blk[0]
                K = np.zeros((N, N), dtype=complex)
                for k in range(self.d + 1):
                    K += (-1j) ** k * coefs[k][:, r, r][:, None] * Dk[k]
                bB = bvals[:, :, r, r].T[:, :, None]
                rhs0 = np.ones((iidx.size, 1))
                sol = self._interior_solve(K[np.ix_(iidx, iidx)], K[np.ix_(iidx, bidx)], bB, rhs0, lam)
                vals = np.zeros((lam.size, N, q, q), dtype=complex)
                vals[:, iidx, r, r] = sol[:, :, 0]
                vals[:, bidx, r, r] = bB[:, :, 0]
            sub = vals - (1.0 / lam)[:, None, None, None] * (np.eye(q) if blk is None else _unit(q, blk[0]))
            out += np.einsum("l,lnij->nij", fw, sub)
        return out

    @staticmethod
    def _interior_solve(KII, KIB, bB, rhs0, lam):
        """Solve ``(lam - KII) y = rhs0 + KIB bB(lam)`` for all ``lam``."""
        T, Z = scipy.linalg.schur(KII, output="complex")
        rhs = rhs0[None] + np.einsum("ib,lbc->lic", KIB, bB)
        L, n, c = rhs.shape
        r = (Z.conj().T @ rhs.transpose(1, 0, 2).reshape(n, L * c))  # Z^H rhs
        den = np.repeat(lam, c)
        y = np.zeros_like(r)
        diagT = np.diag(T)
        for i in range(n - 1, -1, -1):
            y[i] = (r[i] + T[i, i + 1:] @ y[i + 1:]) / (den - diagT[i])
        return (Z @ y).reshape(n, L, c).transpose(1, 0, 2)


def _unit(q: int, r: int) -> np.ndarray:
    e = np.zeros((q, q))
    e[r, r] = 1.0
    return e
