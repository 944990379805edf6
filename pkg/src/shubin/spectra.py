"""Zeta and eta functions of elliptic symbols, their poles and residues.

Values are produced either symbolically (complex powers and the
Kontsevich-Vishik trace) or from the Hermite oracle.  Points where the
trace is undefined because the order is an integer are reached by
continuation: the function is sampled on a small circle and the constant
Laurent coefficient is read off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .calculus import adjoint, sharp, symbol_difference
from .errors import IntegerOrderPole, InvalidBranch, NotSelfAdjoint, PolePoint
from .functionals import (
    PoleFit,
    circle_points,
    fit_known_pole,
    fit_pole_location,
    kv_tr_detailed,
    laurent_circle,
    wodzicki_res,
)
from .powers import DEFAULT_COMPONENTS, complex_power, sectorial_projection
from .symring import ClassicalSymbol, sphere_grid

CIRCLE_RADIUS = 0.1
CIRCLE_POINTS = 6
SYMBOLIC = "symbolic"
ORACLE = "oracle"
SELF_ADJOINT_TOL = 1e-10


@dataclass
class MeromorphicSample:
    """One value of a meromorphic function.

    ``method`` is ``"symbolic"`` or ``"oracle"``; a ``"+circle"`` suffix
    marks values obtained by continuation around an integer-order point.
    """

    z: complex
    value: complex
    truncation_uncertainty: float
    method: str

    def row(self) -> list:
        return [self.z.real, self.z.imag, self.value.real, self.value.imag, self.truncation_uncertainty,
                self.method]


@dataclass
class PoleReport:
    """Location and residue of a pole of ``zeta``."""

    location: complex
    residue: complex
    predicted_location: complex
    residue_formula_value: complex
    j: int
    samples: list = field(default_factory=list)


def _circle(fn, z0: complex, method: str) -> MeromorphicSample:
    pts = circle_points(z0, CIRCLE_RADIUS, CIRCLE_POINTS)
    samples = [fn(complex(z)) for z in pts]
    fit = laurent_circle([s.value for s in samples], z0, CIRCLE_RADIUS)
    unc = max(s.truncation_uncertainty for s in samples)
    return MeromorphicSample(complex(z0), fit.regular, unc, method + "+circle")


def _oracle_disc(a: ClassicalSymbol, N: int):
    return oracle.discretize(a, N)


# ---------------------------------------------------------------------------
# zeta


def zeta(a: ClassicalSymbol, z, theta: float = math.pi, depth: int = DEFAULT_COMPONENTS,
         method: str = SYMBOLIC, continuation: bool = True, oracle_size: int = 400,
         backend: str | None = None) -> MeromorphicSample:
    """``zeta_theta(a, z) = TR(a_theta^(-z))``.

    Parameters
    ----------
    a : ClassicalSymbol
        Positive order, ``lambda``-elliptic along ``theta``.
    z : complex
    theta : float
        Branch ray of ``lambda^(-z)``.
    depth : int
        Number of expansion components of the complex power.
    method : {"symbolic", "oracle"}
    continuation : bool
        At integer orders of ``a^(-z)`` (where the trace itself is undefined)
        return the circle continuation instead of raising.
    """
    z = complex(z)
    if method == ORACLE:
        d = _oracle_disc(a, oracle_size)
        r = oracle.spectral_sum(d, "zeta", z, theta)
        return MeromorphicSample(z, r.value, r.uncertainty, ORACLE)
    if method != SYMBOLIC:
        raise ValueError(f"unknown method {method!r}")
    try:
        P = complex_power(a, -z, theta, depth, backend=backend)
        r = kv_tr_detailed(P)
    except IntegerOrderPole:
        if not continuation:
            raise
        return _circle(lambda w: zeta(a, w, theta, depth, method, False, oracle_size, backend), z, SYMBOLIC)
    return MeromorphicSample(z, r.value, r.uncertainty, SYMBOLIC)


def zeta_pole(a: ClassicalSymbol, j: int, theta: float = math.pi, depth: int = DEFAULT_COMPONENTS,
              h: float = 0.01, method: str = SYMBOLIC, oracle_size: int = 400,
              backend: str | None = None) -> PoleReport:
    """Pole of ``zeta_theta(a, .)`` at ``(2n - j)/m``.

    The residue formula ``(1/m) Res(a_theta^(-(2n - j)/m))`` is evaluated
    directly; location and residue are also fitted from four samples at
    ``s + {-2h, -h, h, 2h}`` with ``method``.
    """
    m, n = a.order, a.n
    s = (2 * n - j) / m
    if abs(s) < 1e-12:
        raise InvalidBranch("j = 2n gives z = 0, where zeta is regular")
    P = complex_power(a, -s, theta, depth, backend=backend)
    formula = wodzicki_res(P) / m
    zs = [s + k * h for k in (-2, -1, 1, 2)]
    samples = [zeta(a, w, theta, depth, method, False, oracle_size, backend) for w in zs]
    fit = fit_pole_location(zs, [x.value for x in samples])
    return PoleReport(fit.location, fit.residue, complex(s), complex(formula), int(j), samples)


# ---------------------------------------------------------------------------
# eta


def check_self_adjoint(a: ClassicalSymbol, tol: float = SELF_ADJOINT_TOL) -> float:
    """Deviation ``|a* - a|`` over the stored components; raises if above ``tol``."""
    depth = a.depth if not a.complete else a.depth + 4
    dev = symbol_difference(adjoint(a, depth), a, depth)
    scale = max(1.0, float(np.abs(a.principal.evaluate(sphere_grid(a.n).nodes)).max()))
    if dev > tol * scale:
        raise NotSelfAdjoint(f"a* differs from a by {dev:.3e}")
    return dev


def _eta_integrand(a: ClassicalSymbol, z: complex, theta: float, depth: int, backend) -> ClassicalSymbol:
    aa = sharp(a, a)
    P = complex_power(aa, -(z + 1) / 2, theta, depth, backend=backend)
    return sharp(a, P, depth)


def eta(a: ClassicalSymbol, z, theta_up: float = math.pi / 2, theta_down: float | None = None,
        depth: int = DEFAULT_COMPONENTS, method: str = SYMBOLIC, continuation: bool = True,
        oracle_size: int = 400, backend: str | None = None, check: bool = True) -> MeromorphicSample:
    """``eta(op(a), z) = TR(a # (a # a)_theta^(-(z + 1)/2))``.

    ``a # a`` has positive spectrum, so any ray off the positive axis is a
    valid branch; ``theta_up`` is used.  When ``theta_down`` is given the
    value is recomputed on that ray too and the difference is added to the
    uncertainty.
    """
    z = complex(z)
    if method == ORACLE:
        d = _oracle_disc(a, oracle_size)
        r = oracle.spectral_sum(d, "eta", z)
        return MeromorphicSample(z, r.value, r.uncertainty, ORACLE)
    if check:
        check_self_adjoint(a)
    try:
        r = kv_tr_detailed(_eta_integrand(a, z, theta_up, depth, backend))
        value, unc = r.value, r.uncertainty
        if theta_down is not None:
            r2 = kv_tr_detailed(_eta_integrand(a, z, theta_down, depth, backend))
            unc += abs(r2.value - value)
    except IntegerOrderPole:
        if not continuation:
            raise
        return _circle(lambda w: eta(a, w, theta_up, theta_down, depth, method, False, oracle_size, backend,
                                     False), z, SYMBOLIC)
    return MeromorphicSample(z, value, unc, SYMBOLIC)


def eta_residue_at_zero(a: ClassicalSymbol, theta: float = -math.pi / 2, theta_prime: float = math.pi / 2,
                        depth: int = DEFAULT_COMPONENTS, backend: str | None = None) -> complex:
    """``2 pi i Res(Pi_{theta, theta'}(a))``, the residue of eta at 0.

    The default sector is the right half-plane, i.e. the positive spectrum.
    """
    Pi = sectorial_projection(a, theta, theta_prime, depth, backend=backend)
    return complex(2j * math.pi * wodzicki_res(Pi))


def eta_pole_fit(a: ClassicalSymbol, h: float = 0.05, method: str = ORACLE, depth: int = DEFAULT_COMPONENTS,
                 oracle_size: int = 400, backend: str | None = None) -> PoleFit:
    """Independent residue of eta at 0 from samples at ``{-2h, -h, h, 2h}``."""
    zs = [k * h for k in (-2, -1, 1, 2)]
    vals = [eta(a, w, method=method, depth=depth, continuation=False, oracle_size=oracle_size,
                backend=backend).value for w in zs]
    return fit_known_pole(zs, vals, 0j)


# ---------------------------------------------------------------------------
# branch dependence


def zeta_branch_difference(a: ClassicalSymbol, z, theta_up: float = math.pi / 2,
                           theta_down: float = 3 * math.pi / 2, depth: int = DEFAULT_COMPONENTS,
                           backend: str | None = None) -> MeromorphicSample:
    """``zeta_up(a, z) - zeta_down(a, z)`` for two branch rays.

    The two powers differ by ``e^(2 pi i z)`` on the spectrum between the
    rays, so the difference is ``(e^(2 pi i z) - 1) TR(Pi a_down^(-z))``
    with ``Pi`` the projection onto the sector ``(theta_up, theta_down)``.
    At an integer ``k`` this has the finite value
    ``(2 pi i / m) Res(Pi # a_down^(-k))``, which is returned there
    (``method="symbolic+residue"``) since the traces themselves may be
    undefined.
    """
    z = complex(z)
    k = round(z.real)
    if abs(z.imag) < 1e-12 and abs(z.real - k) < 1e-12:
        Pi = sectorial_projection(a, theta_up, theta_down, depth, backend=backend)
        P = complex_power(a, -k, theta_down, depth, exact=False, backend=backend)
        value = 2j * math.pi / a.order * wodzicki_res(sharp(Pi, P, depth))
        return MeromorphicSample(z, complex(value), 1e-10, SYMBOLIC + "+residue")
    up = zeta(a, z, theta_up, depth, continuation=False, backend=backend)
    down = zeta(a, z, theta_down, depth, continuation=False, backend=backend)
    return MeromorphicSample(z, up.value - down.value, up.truncation_uncertainty + down.truncation_uncertainty,
                             SYMBOLIC)


@dataclass
class BranchLimit:
    """Limit of the branch difference at ``z -> 0``."""

    value: complex
    uncertainty: float
    method: str
    samples: list


def branch_difference_limit(a: ClassicalSymbol, theta_up: float = math.pi / 2,
                            theta_down: float = 3 * math.pi / 2, depth: int = DEFAULT_COMPONENTS,
                            method: str = "circle", points=(0.1, 0.05),
                            backend: str | None = None) -> BranchLimit:
    """Value at ``z = 0`` of the (holomorphic) branch difference.

    ``method="circle"`` averages six samples on the circle of radius 0.1
    around 0, exact up to the sixth Taylor coefficient.  ``"richardson"``
    extrapolates linearly from two real points and is only first order.
    """
    if method == "circle":
        pts = circle_points(0j, CIRCLE_RADIUS, CIRCLE_POINTS)
        samples = [zeta_branch_difference(a, w, theta_up, theta_down, depth, backend) for w in pts]
        fit = laurent_circle([s.value for s in samples], 0j, CIRCLE_RADIUS)
        unc = max(s.truncation_uncertainty for s in samples)
        return BranchLimit(fit.regular, unc, method, samples)
    if method == "richardson":
        z1, z2 = points
        s1 = zeta_branch_difference(a, z1, theta_up, theta_down, depth, backend)
        s2 = zeta_branch_difference(a, z2, theta_up, theta_down, depth, backend)
        value = (z1 * s2.value - z2 * s1.value) / (z1 - z2)
        return BranchLimit(complex(value), abs(s2.value - s1.value), method, [s1, s2])
    raise ValueError(f"unknown method {method!r}")


def sample_table(fn, zs) -> list:
    """Evaluate ``fn(z)`` at each point, collecting :class:`MeromorphicSample` objects."""
    out = []
    for z in zs:
        try:
            out.append(fn(complex(z)))
        except PolePoint:
            continue
    return out
