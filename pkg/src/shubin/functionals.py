"""Wodzicki residue and the Kontsevich-Vishik trace of classical symbols.

Both functionals only see sphere integrals ``S_j = int_{S^(2n-1)} tr a_j``
of the homogeneous components plus, for the trace, radial integrals of the
full symbol.  The trace is evaluated in the form

    (2 pi)^n TR(a) = int_0^R [F(r) - sum_{j<p} chi(r) r^(d_j) S_j] r^(2n-1) dr
                     + sum_{j<p} S_j fp int_0^inf chi(r) r^(d_j + 2n - 1) dr
                     - sum_{p<=j<J} S_j R^(d_j + 2n) / (d_j + 2n),

with ``F(r) = int_S tr a(r w) dw`` and ``d_j = order - j``.  Taking
``chi = 1`` outside the unit ball reduces it to the ball/exterior split
with the ``(2n + d_j)^(-1)`` counter-terms; a general ``chi`` gives an
independent check since it must cancel.

The module also holds the small Laurent fitting helpers used to extract
residues of meromorphic families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    FitIllConditioned,
    InsufficientExpansion,
    IntegerOrderPole,
    TailDivergence,
)
from .symring import ClassicalSymbol, ExcisionProfile, SphereGrid, sphere_grid

ORDER_TOL = 1e-10
RADIAL_NODES = 20
EXACT_RADIUS = 1024.0


def _trace_grid(n: int) -> SphereGrid:
    return sphere_grid(1) if n == 1 else sphere_grid(2, (12, 24))


def _component_traces(a: ClassicalSymbol, j: int, grid: SphereGrid) -> np.ndarray:
    c = a.component(j)
    if c.is_zero:
        return np.zeros(grid.size, dtype=complex)
    if getattr(c, "rep", "ring") == "grid" and c.grid == grid:
        vals = c.values
    else:
        vals = c.evaluate(grid.nodes)
    return np.trace(vals, axis1=1, axis2=2)


def sphere_integral(a: ClassicalSymbol, j: int, grid: SphereGrid | None = None) -> complex:
    """``int_{S^(2n-1)} tr a_(order - j)``."""
    grid = grid or _trace_grid(a.n)
    return complex(grid.integrate(_component_traces(a, j, grid)))


def _near_int(z: complex) -> int | None:
    if abs(z.imag) > ORDER_TOL:
        return None
    k = round(z.real)
    return int(k) if abs(z.real - k) <= ORDER_TOL else None


def wodzicki_res(a: ClassicalSymbol, grid: SphereGrid | None = None) -> complex:
    """Wodzicki residue ``(2 pi)^(-n) int_S tr a_(-2n)``.

    Returns 0 when no component of ``a`` has degree ``-2n``.

    Raises
    ------
    InsufficientExpansion
        The degree ``-2n`` component exists in principle but was truncated
        away.
    """
    j = _near_int(a.order + 2 * a.n)
    if j is None or j < 0:
        return 0j
    if not a.available(j):
        raise InsufficientExpansion(f"residue needs component {j}, only {a.depth} stored")
    grid = grid or _trace_grid(a.n)
    return sphere_integral(a, j, grid) / (2 * math.pi) ** a.n


@dataclass
class TraceResult:
    """Value of ``TR(a)`` with its truncation uncertainty.

    Attributes
    ----------
    value : complex
    uncertainty : float
        Twice the contribution of the last non-vanishing stored component
        (its tail beyond ``radius`` for exact evaluators, its whole
        finite-part integral for glued symbols); zero for complete symbols.
    p : int
        Number of subtracted components.
    radius : float
        Radius beyond which the analytic tail was used.
    """

    value: complex
    uncertainty: float
    p: int
    radius: float


def minimal_p(order: complex, n: int) -> int:
    """Smallest ``p >= 0`` with ``Re(order) - p < -2n``."""
    return max(0, int(math.floor(order.real + 2 * n)) + 1)


def _gauss_panels(breaks, m: int = RADIAL_NODES):
    t, w = np.polynomial.legendre.leggauss(m)
    rs, ws = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        rs.append(0.5 * (hi - lo) * t + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * w)
    return np.concatenate(rs), np.concatenate(ws)


def _chi_moment(chi: ExcisionProfile, e: complex) -> complex:
    """``fp int_0^inf chi(r) r^(e - 1) dr`` for ``e != 0``."""
    r, w = _gauss_panels([chi.r0, chi.r1], 32)
    inner = np.sum(w * chi(r) * np.exp((e - 1) * np.log(r)))
    return complex(inner - chi.r1**e / e)


def _radial_profile(a: ClassicalSymbol, r: np.ndarray, grid: SphereGrid, chunk: int = 64) -> np.ndarray:
    """``F(r) = int_S tr a(r w) dw`` for every radius in ``r``."""
    out = np.empty(r.shape[0], dtype=complex)
    for i0 in range(0, r.shape[0], chunk):
        rr = r[i0:i0 + chunk]
        pts = (rr[:, None, None] * grid.nodes[None]).reshape(-1, grid.nodes.shape[1])
        vals = np.trace(a.eval_full(pts), axis1=1, axis2=2).reshape(rr.shape[0], grid.size)
        out[i0:i0 + chunk] = vals @ grid.weights
    return out


def _outer_radius(a: ClassicalSymbol, chi: ExcisionProfile, radius) -> float:
    if radius is not None:
        return float(radius)
    floor = max(1.0, chi.r1)
    if a.exact is None:
        return max(floor, a.excision.r1)
    rad = getattr(a.exact, "asymptotic_radius", None)
    return max(floor, float(rad)) if rad is not None else max(floor, EXACT_RADIUS)


def kv_tr_detailed(a: ClassicalSymbol, p: int | None = None, excision: ExcisionProfile | None = None,
                   grid: SphereGrid | None = None, radius: float | None = None) -> TraceResult:
    """Kontsevich-Vishik trace with an uncertainty estimate.

    Parameters
    ----------
    a : ClassicalSymbol
        Order must avoid ``-2n + N_0``.
    p : int, optional
        Number of subtracted components; must satisfy
        ``Re(order) - p < -2n``.  Defaults to the smallest such ``p``.
    excision : ExcisionProfile, optional
        Cut-off multiplying the subtracted components (``a.excision`` by
        default).  The result does not depend on it.
    radius : float, optional
        Radius where the numerical radial integral hands over to the sum of
        component tails.  By default the asymptotic radius of the exact
        evaluator, the gluing radius for glued symbols, and 1024 otherwise.
    """
    n, z = a.n, a.order
    k = _near_int(z)
    if k is not None and k >= -2 * n:
        raise IntegerOrderPole(f"TR is undefined at integer order {k} >= {-2 * n}")
    p = minimal_p(z, n) if p is None else int(p)
    if z.real - p >= -2 * n:
        raise TailDivergence(f"p = {p} leaves a remainder of order {z.real - p:g}, not integrable")
    for j in range(p):
        if not a.available(j):
            raise InsufficientExpansion(f"TR with p = {p} needs component {j}, only {a.depth} stored")
    grid = grid or _trace_grid(n)
    chi = excision or a.excision
    R = _outer_radius(a, chi, radius)
    J = a.depth
    S = [sphere_integral(a, j, grid) for j in range(max(J, p))]
    d = [z - j for j in range(len(S))]

    breaks = {0.0, chi.r0, chi.r1, 1.0, R}
    if a.exact is None:
        breaks |= {a.excision.r0, a.excision.r1}
    b = 2.0
    while b < R:
        breaks.add(b)
        b *= 2.0
    breaks = sorted(x for x in breaks if x <= R)
    r, w = _gauss_panels(breaks)
    F = _radial_profile(a, r, grid)
    cr = chi(r)
    for j in range(p):
        if S[j] != 0:
            F = F - cr * S[j] * np.exp(d[j] * np.log(r))
    total = np.sum(w * F * r ** (2 * n - 1))
    for j in range(p):
        if S[j] != 0:
            total += S[j] * _chi_moment(chi, d[j] + 2 * n)
    for j in range(p, J):
        if S[j] != 0:
            e = d[j] + 2 * n
            total -= S[j] * np.exp(e * np.log(R)) / e
    norm = (2 * math.pi) ** n
    unc = 0.0
    if not a.complete and J > 0:
        big = max((abs(x) for x in S[:J]), default=0.0)
        live = [j for j in range(J) if abs(S[j]) > 1e-12 * big]
        if live:
            j = live[-1]
            e = d[j] + 2 * n
            if a.exact is None:
                last = S[j] * _chi_moment(a.excision, e)
            elif j >= p:
                last = S[j] * np.exp(e * np.log(R)) / e
            else:
                last = 0.0
            unc = 2.0 * abs(last) / norm
    value = complex(total / norm)
    unc += 1e-13 * max(1.0, abs(value))
    return TraceResult(value, float(unc), p, float(R))


def kv_tr(a: ClassicalSymbol, p: int | None = None, excision: ExcisionProfile | None = None,
          grid: SphereGrid | None = None, radius: float | None = None) -> complex:
    """Kontsevich-Vishik trace ``TR(a)``; see :func:`kv_tr_detailed`."""
    return kv_tr_detailed(a, p, excision, grid, radius).value


# ---------------------------------------------------------------------------
# Laurent fits


@dataclass
class PoleFit:
    """Simple-pole model ``residue / (z - location) + regular + ...``."""

    location: complex
    residue: complex
    regular: complex
    residual: float


def fit_known_pole(zs, values, z0: complex = 0j) -> PoleFit:
    """Least-squares fit of ``c_-1/t + c_0 + c_1 t`` with ``t = z - z0``."""
    t = np.asarray(zs, dtype=complex) - z0
    f = np.asarray(values, dtype=complex)
    if np.any(np.abs(t) == 0):
        raise FitIllConditioned("sample placed on the pole")
    A = np.stack([1.0 / t, np.ones_like(t), t], axis=1)
    if np.linalg.cond(A) > 1e12:
        raise FitIllConditioned("Laurent fit matrix is singular")
    c, *_ = np.linalg.lstsq(A, f, rcond=None)
    res = float(np.linalg.norm(A @ c - f))
    return PoleFit(complex(z0), complex(c[0]), complex(c[1]), res)


def fit_pole_location(zs, values) -> PoleFit:
    """Fit ``c/(z - s) + d0 + d1 (z - s)`` with unknown ``s``.

    Multiplying through by ``z - s`` and dropping ``d1`` gives the linear
    system ``z f = s f + C + d0 z``; four samples over-determine it.
    """
    z = np.asarray(zs, dtype=complex)
    f = np.asarray(values, dtype=complex)
    A = np.stack([f, np.ones_like(z), z], axis=1)
    if np.linalg.cond(A) > 1e12:
        raise FitIllConditioned("pole location fit is singular")
    (s, C, d0), *_ = np.linalg.lstsq(A, z * f, rcond=None)
    res = float(np.linalg.norm(A @ np.array([s, C, d0]) - z * f))
    return PoleFit(complex(s), complex(C + d0 * s), complex(d0), res)


def circle_points(z0: complex, radius: float = 0.1, count: int = 6) -> np.ndarray:
    phi = 2 * np.pi * (np.arange(count) + 0.5) / count
    return z0 + radius * np.exp(1j * phi)


def laurent_circle(values, z0: complex, radius: float, count: int | None = None) -> PoleFit:
    """Trapezoidal Laurent coefficients from samples on :func:`circle_points`.

    ``regular`` is the mean of the samples (the ``c_0`` coefficient up to
    aliasing of order ``radius^count``) and ``residue`` is ``c_-1``.
    """
    f = np.asarray(values, dtype=complex)
    m = f.shape[0] if count is None else count
    zs = circle_points(z0, radius, m)
    t = zs - z0
    c0 = np.mean(f)
    cm1 = np.mean(f * t)
    spread = float(np.abs(f - c0 - cm1 / t).max())
    return PoleFit(complex(z0), complex(cm1), complex(c0), spread)


def tr_family_pole(fam: Callable[[complex], ClassicalSymbol], z0: complex = 0j, h: float = 0.01,
                   **tr_kwargs) -> PoleFit:
    """Residue and regular part of ``z -> TR(fam(z))`` at ``z0``.

    Samples at ``z0 + {-2h, -h, h, 2h}`` and fits
    ``c_-1/(z - z0) + c_0 + c_1 (z - z0)``.
    """
    zs = [z0 + s * h for s in (-2, -1, 1, 2)]
    vals = [kv_tr(fam(complex(z)), **tr_kwargs) for z in zs]
    return fit_known_pole(zs, vals, z0)
