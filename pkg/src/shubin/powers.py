"""Complex powers and sectorial projections.

For ``Re z < 0`` the components of ``a^z`` are contour integrals of the
resolvent parametrix components,

    (a^z)_k(w) = 1/(2 pi i) int_keyhole lam^z (b_k(w, lam) - delta_k0 / lam) dlam,

evaluated at the nodes of a sphere grid.  The subtracted ``1/lam`` integrates
to zero on the keyhole and makes every integrand decay like
``|lam|^(Re z - 2)``.  For ``Re z >= 0`` the power is reduced to
``a^(z - k) # a^k`` with the smallest integer ``k > Re z``.

A polynomial symbol in one dimension also gets an exact evaluator of the
full symbol of ``a^z`` (see :class:`shubin.resolvent.OdeResolvent`).
"""

from __future__ import annotations

import math

import numpy as np

from .calculus import Sector, is_lambda_elliptic, sharp, sharp_power, symbol_difference
from .errors import InvalidBranch, NotLambdaElliptic, UnsupportedSymbol
from .resolvent import (
    ContourSpec,
    OdeResolvent,
    bary_matrix,
    contour_nodes,
    default_eps,
    default_lam_split,
    integrate_components,
    panels_for_radius,
)
from .symring import (
    ClassicalSymbol,
    FullSymbol,
    GridComponent,
    RingFull,
    as_points,
    scalar_identity,
    sphere_grid,
)

DEFAULT_COMPONENTS = 8
DEFAULT_JETS = 6
BOX_HALF_WIDTH = 10.0
BOX_NODES = 72
TAIL_NODES = 32
TAIL_RADIUS_FACTOR = 32.0


class PowerFull(FullSymbol):
    """Full symbol of a contour integral of the exact resolvent (``n = 1``).

    Inside the box ``[-L, L]^2`` values come from the Chebyshev grid of
    :class:`OdeResolvent`; outside it from the homogeneous components, which
    are accurate there to order ``L^(Re order - K)``.
    """

    name = "contour"

    def __init__(self, ode: OdeResolvent, components: list, q: int):
        self.ode = ode
        self.components = components
        self.n, self.q = 1, q
        self.asymptotic_radius = ode.L
        self._derivs: dict = {}

    def supports(self, deriv) -> bool:
        return True

    def _grid_deriv(self, deriv):
        key = (0, 0) if deriv is None else tuple(deriv)
        if key not in self._derivs:
            G = self.ode.grid_values()
            bx, ax = key
            for _ in range(ax):
                G = np.einsum("kj,jiab->kiab", self.ode.Dxi, G)
            for _ in range(bx):
                G = np.einsum("ij,kjab->kiab", self.ode.Dx, G)
            self._derivs[key] = G
        return self._derivs[key]

    def evaluate(self, points, deriv=None) -> np.ndarray:
        pts = as_points(points, 1)
        L = self.ode.L
        inside = (np.abs(pts[:, 0]) <= L) & (np.abs(pts[:, 1]) <= L)
        out = np.zeros((pts.shape[0], self.q, self.q), dtype=complex)
        if np.any(inside):
            sub = pts[inside]
            G = self._grid_deriv(deriv)
            Wxi = bary_matrix(self.ode.xi, sub[:, 1])
            Wx = bary_matrix(self.ode.x, sub[:, 0])
            T = (Wxi @ G.reshape(G.shape[0], -1)).reshape(sub.shape[0], G.shape[1], self.q, self.q)
            out[inside] = np.einsum("pi,piab->pab", Wx, T)
        if np.any(~inside):
            sub = pts[~inside]
            acc = np.zeros((sub.shape[0], self.q, self.q), dtype=complex)
            for c in self.components:
                if c.is_zero:
                    continue
                cc = c.partial(deriv) if deriv is not None and any(deriv) else c
                acc += cc.evaluate(sub)
            out[~inside] = acc
        return out


def _contour_for(a: ClassicalSymbol, theta: float, eps, scale: float, kind: str = "keyhole",
                 theta_prime=None, panels=None, min_radius: float = 0.0):
    # rays end well outside every pole of the integrand; the tail circle
    # covers the rest
    eps = default_eps(a) if eps is None else float(eps)
    spec = ContourSpec(kind, theta, theta_prime, eps, tail=TAIL_NODES)
    if panels is None:
        panels = panels_for_radius(spec, max(TAIL_RADIUS_FACTOR * scale, min_radius))
    return contour_nodes(spec.with_panels(panels))


def _check_power_input(a: ClassicalSymbol, theta: float, grid) -> None:
    if a.order.real <= 0 or abs(a.order.imag) > 1e-12:
        raise UnsupportedSymbol("complex powers need a positive real order")
    chk = is_lambda_elliptic(a, Sector(theta), grid)
    if not chk.ok:
        raise InvalidBranch(f"ray arg = {theta:.4f} meets the principal spectrum (margin {chk.margin:.2e})")


def _box_scale(A: RingFull, L: float) -> float:
    c = np.array([[L, L], [L, -L], [0.0, L], [L, 0.0]])
    return float(np.abs(A.evaluate(c)).max())


def complex_power(a: ClassicalSymbol, z, theta: float = math.pi, K_comp: int = DEFAULT_COMPONENTS,
                  K_jet: int = DEFAULT_JETS, eps: float | None = None, grid=None, exact: bool | None = None,
                  panels: int | None = None, backend: str | None = None) -> ClassicalSymbol:
    """Symbol of ``a^z`` on the branch cut along ``arg lambda = theta``.

    Parameters
    ----------
    a : ClassicalSymbol
        Positive order, ring components, ``lambda``-elliptic on the ray.
    z : complex
    theta : float
        Branch ray; ``lambda^z`` uses ``arg`` in ``(theta - 2 pi, theta)``.
    K_comp : int
        Number of homogeneous components.
    K_jet : int
        Differentiations that later compositions may apply to each
        component.
    eps : float, optional
        Radius of the small arc; must lie below the spectrum of ``op(a)``.
    exact : bool, optional
        Build the exact evaluator (default: whenever ``a`` is a polynomial
        with ``n = 1``).

    Returns
    -------
    ClassicalSymbol
        Order ``a.order * z``.
    """
    z = complex(z)
    grid = grid or sphere_grid(a.n)
    _check_power_input(a, theta, grid)
    m = a.order
    if z.imag == 0 and z.real == round(z.real) and z.real >= 0:
        k = int(round(z.real))
        if k == 0:
            one = scalar_identity(a.n, a.q)
            return one
        return sharp_power(a, k, K_comp if not a.complete else None).truncated(K_comp)
    if z.real >= 0:
        k = int(math.floor(z.real)) + 1
        base = complex_power(a, z - k, theta, K_comp, K_jet, eps, grid, exact, panels, backend)
        ak = sharp_power(a, k)
        return sharp(base, ak, K_comp)
    A = a.ring_full()
    want_exact = (A is not None and a.n == 1) if exact is None else bool(exact)
    if want_exact and (A is None or a.n != 1):
        raise UnsupportedSymbol("exact powers need a polynomial symbol with n = 1")
    scale = max(1.0, float(np.abs(a.principal.evaluate(grid.nodes)).max()))
    if want_exact:
        scale = max(scale, _box_scale(A, BOX_HALF_WIDTH))
    nodes = _contour_for(a, theta, eps, scale, panels=panels,
                         min_radius=2 * default_lam_split(A) if want_exact else 0.0)
    fvals = nodes.power(z)
    vals = integrate_components(a, grid.nodes, nodes, fvals, K_comp, backend)
    floor = 1e-13 * float(np.abs(vals[:, 0]).max())
    comps = [GridComponent(m * z - k, vals[:, k], grid, K_jet, floor) for k in range(K_comp)]
    full = None
    if want_exact:
        ode = OdeResolvent(A, nodes, fvals, L=BOX_HALF_WIDTH, nx=BOX_NODES, nxi=BOX_NODES, backend=backend)
        full = PowerFull(ode, comps, a.q)
    return ClassicalSymbol(m * z, comps, a.n, a.q, exact=full, excision=a.excision,
                           name=f"power({a.name or 'a'}, {z:g})")


def sectorial_projection(a: ClassicalSymbol, theta: float, theta_prime: float, K_comp: int = DEFAULT_COMPONENTS,
                         K_jet: int = DEFAULT_JETS, eps: float | None = None, grid=None,
                         panels: int | None = None, backend: str | None = None) -> ClassicalSymbol:
    """Symbol of the projection onto the spectrum in the sector ``[theta, theta']``.

    ``Pi = a # (1/2 pi i) int_Gamma lambda^(-1) (lambda - a)^(-#) dlambda``
    with the sector contour of :mod:`shubin.resolvent`.  Both bounding rays
    must avoid the principal spectrum.
    """
    grid = grid or sphere_grid(a.n)
    for ang in (theta, theta_prime):
        chk = is_lambda_elliptic(a, Sector(ang), grid)
        if not chk.ok:
            raise NotLambdaElliptic(f"ray arg = {ang:.4f} meets the principal spectrum")
    scale = max(1.0, float(np.abs(a.principal.evaluate(grid.nodes)).max()))
    nodes = _contour_for(a, theta, eps, scale, kind="sector", theta_prime=theta_prime, panels=panels)
    fvals = nodes.power(-1)
    vals = integrate_components(a, grid.nodes, nodes, fvals, K_comp, backend)
    floor = 1e-13 * max(float(np.abs(vals[:, 0]).max()), 1e-300)
    comps = [GridComponent(-a.order - k, vals[:, k], grid, K_jet, floor) for k in range(K_comp)]
    C = ClassicalSymbol(-a.order, comps, a.n, a.q, excision=a.excision)
    out = sharp(a, C, K_comp)
    out.name = f"projection({a.name or 'a'}, {theta:g}, {theta_prime:g})"
    return out


def power_additivity_check(a: ClassicalSymbol, z1, z2, theta: float = math.pi, K_comp: int = 6,
                           grid=None, backend: str | None = None) -> float:
    """Largest component deviation between ``a^z1 # a^z2`` and ``a^(z1 + z2)``."""
    grid = grid or sphere_grid(a.n)
    p1 = complex_power(a, z1, theta, K_comp, exact=False, grid=grid, backend=backend)
    p2 = complex_power(a, z2, theta, K_comp, exact=False, grid=grid, backend=backend)
    p12 = complex_power(a, complex(z1) + complex(z2), theta, K_comp, exact=False, grid=grid, backend=backend)
    return symbol_difference(sharp(p1, p2, K_comp), p12, K_comp, grid)
