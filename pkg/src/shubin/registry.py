"""Named symbols with exact full-symbol evaluators.

Each entry builds a complete :class:`ClassicalSymbol` from a parameter
dictionary.  The symbol JSON format refers to these by name.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import InvalidSymbol
from .symring import (
    CallableFull,
    ClassicalSymbol,
    HomogeneousComponent,
    RingFull,
    SymbolTerm,
    as_points,
)


def harmonic_oscillator(scale: float = 1.0, n: int = 1) -> ClassicalSymbol:
    """``scale * (|x|^2 + |xi|^2 + 1) / 2``; eigenvalues ``scale * (j + n/2 - 1/2)``, ``j >= 1``."""
    terms = [SymbolTerm(0.5 * scale, (0,) * n, (0,) * n, 1.0), SymbolTerm(0.5 * scale, (0,) * n, (0,) * n)]
    return ClassicalSymbol.from_ring(RingFull(terms, n, 1), name="ho")


def diag_harmonic_oscillator(scales=(1.0, -1.0), n: int = 1) -> ClassicalSymbol:
    """Block-diagonal ``diag(c_1 HO, ..., c_q HO)``."""
    c = np.diag(np.asarray(scales, dtype=float) * 0.5)
    terms = [SymbolTerm(c, (0,) * n, (0,) * n, 1.0), SymbolTerm(c, (0,) * n, (0,) * n)]
    return ClassicalSymbol.from_ring(RingFull(terms, n, len(scales)), name="diag_ho")


def _shifted_derivative(s: complex, n: int, deriv: tuple) -> dict:
    """``d^deriv (1 + rho^2)^s`` as ``{(exponents, k): c}`` meaning ``c x^e (1 + rho^2)^(s - k)``."""
    terms = {((0,) * (2 * n), 0): 1.0 + 0j}
    for var, count in enumerate(deriv):
        for _ in range(count):
            new: dict = {}
            for (e, k), c in terms.items():
                if e[var]:
                    e1 = list(e)
                    e1[var] -= 1
                    key = (tuple(e1), k)
                    new[key] = new.get(key, 0) + c * e[var]
                coef = c * 2 * (s - k)
                if coef != 0:
                    e2 = list(e)
                    e2[var] += 1
                    key = (tuple(e2), k + 1)
                    new[key] = new.get(key, 0) + coef
            terms = new
    return terms


def shifted_quadratic_power(s: complex = -2.0, n: int = 1, depth: int = 12) -> ClassicalSymbol:
    """``(1 + |x|^2 + |xi|^2)^s`` with ``depth`` homogeneous components.

    The expansion is ``sum_k binom(s, k) rho^(2s - 2k)``; integer ``s >= 0``
    gives a polynomial.
    """
    s = complex(s)
    if s.imag == 0 and s.real >= 0 and s.real == round(s.real):
        k = int(round(s.real))
        terms = [SymbolTerm(math.comb(k, i), (0,) * n, (0,) * n, i) for i in range(k + 1)]
        return ClassicalSymbol.from_ring(RingFull(terms, n, 1), name="shifted_quadratic_power")

    def func(pts):
        r2 = np.sum(pts**2, axis=1)
        return np.exp(s * np.log1p(r2))[:, None, None]

    def deriv(pts, d):
        pts = as_points(pts, n)
        u = 1.0 + np.sum(pts**2, axis=1)
        out = np.zeros(pts.shape[0], dtype=complex)
        for (e, k), c in _shifted_derivative(s, n, d).items():
            mono = np.ones(pts.shape[0])
            for v, p in enumerate(e):
                if p:
                    mono = mono * pts[:, v] ** p
            out += c * mono * np.exp((s - k) * np.log(u))
        return out[:, None, None]

    comps = []
    binom = 1.0 + 0j
    for j in range(depth):
        if j % 2 == 0:
            k = j // 2
            if k > 0:
                binom *= (s - k + 1) / k
            comps.append(HomogeneousComponent(2 * s - j, [SymbolTerm(binom, (0,) * n, (0,) * n, s - k)], n, 1))
        else:
            comps.append(HomogeneousComponent.zero(2 * s - j, n, 1))
    full = CallableFull(func, n, 1, name="shifted_quadratic_power", derivative=deriv)
    return ClassicalSymbol(2 * s, comps, n, 1, exact=full, name="shifted_quadratic_power")


def harmonic_oscillator_square(scale: float = 1.0) -> ClassicalSymbol:
    """Symbol of ``op(HO)^2``; eigenvalues ``scale^2 j^2``."""
    from .calculus import sharp

    ho = harmonic_oscillator(scale)
    out = sharp(ho, ho)
    out.name = "ho_square"
    return out


REGISTRY: dict[str, Callable[..., ClassicalSymbol]] = {
    "ho": harmonic_oscillator,
    "diag_ho": diag_harmonic_oscillator,
    "shifted_quadratic_power": shifted_quadratic_power,
    "ho_square": harmonic_oscillator_square,
}


def build(name: str, params: dict | None = None) -> ClassicalSymbol:
    """Instantiate a registered symbol."""
    if name not in REGISTRY:
        raise InvalidSymbol(f"unknown registered symbol {name!r}; known: {sorted(REGISTRY)}")
    try:
        return REGISTRY[name](**(params or {}))
    except TypeError as exc:
        raise InvalidSymbol(f"bad parameters for {name!r}: {exc}") from None
