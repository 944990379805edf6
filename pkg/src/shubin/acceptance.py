"""Acceptance checks grouped into suites.

Each check returns a :class:`CheckResult` with the measured deviation and
its tolerance.  ``run_suite("all")`` runs every numbered criterion; the
command line ``verify`` subcommand prints the results.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracle, registry
from .calculus import adjoint, parametrix, sharp, symbol_difference
from .functionals import kv_tr, tr_family_pole, wodzicki_res
from .powers import complex_power, sectorial_projection
from .resolvent import ContourSpec, contour_nodes
from .spectra import eta, eta_pole_fit, eta_residue_at_zero, zeta, zeta_pole
from .symring import (
    ClassicalSymbol,
    ExcisionProfile,
    HomogeneousComponent,
    RingFull,
    SymbolTerm,
    poly,
    sphere_grid,
)

SEED = 20240611


@dataclass
class CheckResult:
    criterion: int
    name: str
    measured: float
    tolerance: float
    passed: bool
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"[{mark}] criterion {self.criterion}: {self.name}: measured {self.measured:.3e} "
                f"(tolerance {self.tolerance:.1e}, {self.seconds:.1f} s)")


def _check(criterion: int, name: str, fn: Callable[[], float], tol: float,
           max_seconds: float | None = None) -> CheckResult:
    t0 = time.perf_counter()
    try:
        measured = float(fn())
    except Exception as exc:  # a failing computation is a failed check
        return CheckResult(criterion, f"{name} ({type(exc).__name__}: {exc})", math.inf, tol, False,
                           time.perf_counter() - t0)
    dt = time.perf_counter() - t0
    ok = measured <= tol and (max_seconds is None or dt <= max_seconds)
    if max_seconds is not None:
        name = f"{name} [< {max_seconds:g} s]"
    return CheckResult(criterion, name, measured, tol, bool(ok), dt)


# ---------------------------------------------------------------------------
# shared symbols


def ho() -> ClassicalSymbol:
    return registry.harmonic_oscillator()


def decaying_symbol() -> ClassicalSymbol:
    """``(1 + rho^2)^(-2)``, exact, with eight components."""
    return registry.shifted_quadratic_power(-2.0, depth=8)


def glued_order_minus3() -> ClassicalSymbol:
    """``x^2 rho^-5 + rho^-4``, represented only through its components."""
    c0 = HomogeneousComponent(-3, [SymbolTerm(1.0, (2,), (0,), -2.5)], 1, 1)
    c1 = HomogeneousComponent(-4, [SymbolTerm(1.0, (0,), (0,), -2)], 1, 1)
    return ClassicalSymbol(-3, [c0, c1], 1, 1)


def _random_poly(rng: np.random.Generator, deg: int) -> RingFull:
    coeffs = {}
    for b in range(deg + 1):
        for a in range(deg + 1 - b):
            coeffs[(b, a)] = complex(rng.normal(), rng.normal())
    return poly(coeffs)


def _random_gaussian(rng: np.random.Generator) -> oracle.GaussianPoly:
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    return oracle.GaussianPoly(tuple(complex(v) for v in c), float(rng.uniform(0.7, 1.3)))


def _poly_gap(u: oracle.GaussianPoly, v: oracle.GaussianPoly) -> float:
    du = np.asarray(u.coeffs)
    dv = np.asarray(v.coeffs)
    m = max(du.size, dv.size)
    du = np.pad(du, (0, m - du.size))
    dv = np.pad(dv, (0, m - dv.size))
    return float(np.abs(du - dv).max() / max(1.0, np.abs(dv).max()))


# ---------------------------------------------------------------------------
# criterion 1


def check_ho_spectrum() -> CheckResult:
    def run():
        d = oracle.discretize(ho(), 400)
        ev = np.sort(oracle.eigenvalues(d).real)[:20]
        return np.abs(ev - np.arange(1, 21)).max()

    return _check(1, "HO eigenvalues 1..20 from the N = 400 Hermite matrix", run, 1e-8, max_seconds=10)


# ---------------------------------------------------------------------------
# criterion 2 and 3


def check_zeta_oracle() -> CheckResult:
    return _check(2, "oracle zeta_HO(2) = pi^2/6",
                  lambda: abs(zeta(ho(), 2, method="oracle").value - math.pi**2 / 6), 1e-10, max_seconds=60)


def check_zeta_symbolic(z: int, tol: float) -> CheckResult:
    exact = {2: math.pi**2 / 6, 4: math.pi**4 / 90}[z]
    return _check(2, f"symbolic zeta_HO({z}) relative error", lambda: abs(zeta(ho(), z).value / exact - 1), tol,
                  max_seconds=60)


def check_zeta_pole_formula() -> CheckResult:
    return _check(3, "zeta_HO pole at 1: (1/m) Res(a^-1) = 1",
                  lambda: abs(wodzicki_res(complex_power(ho(), -1.0)) / 2 - 1), 1e-4)


def check_zeta_pole_oracle() -> CheckResult:
    def run():
        rep = zeta_pole(ho(), 0, method="oracle")
        return max(abs(rep.residue - 1), abs(rep.location - 1))

    return _check(3, "zeta_HO pole at 1: oracle four-point fit of location and residue", run, 1e-3)


def check_zeta_pole_symbolic() -> CheckResult:
    def run():
        rep = zeta_pole(ho(), 0)
        return max(abs(rep.residue - 1), abs(rep.location - 1))

    return _check(3, "zeta_HO pole at 1: symbolic four-point fit of location and residue", run, 1e-3)


# ---------------------------------------------------------------------------
# criterion 4 and 5


def check_tr_closed_form() -> CheckResult:
    return _check(4, "TR((1 + rho^2)^-2) = 1/2", lambda: abs(kv_tr(decaying_symbol()) - 0.5), 1e-8)


def check_tr_oracle() -> CheckResult:
    def run():
        a = decaying_symbol()
        tr = oracle.trace(oracle.discretize(a, 500)).value
        return abs(tr - kv_tr(a))

    return _check(4, "TR((1 + rho^2)^-2) against the N = 500 matrix trace", run, 1e-4)


def check_tr_chi() -> CheckResult:
    def run():
        g = glued_order_minus3()
        return max(abs(kv_tr(g, p) - kv_tr(g, p, excision=ExcisionProfile(0.25, 1.0))) for p in (0, 1, 2))

    return _check(4, "TR independent of the excision function (order -3, p = 0, 1, 2)", run, 1e-9)


def check_tr_p() -> CheckResult:
    def run():
        a = decaying_symbol()
        vals = [kv_tr(a, p) for p in range(4)]
        g = glued_order_minus3()
        gv = [kv_tr(g, p) for p in range(3)]
        return max(np.abs(np.diff(vals)).max(), np.abs(np.diff(gv)).max())

    return _check(4, "TR independent of the subtraction depth p", run, 1e-9)


def _rho_family(z: complex) -> ClassicalSymbol:
    c = HomogeneousComponent(z - 2, [SymbolTerm(2.0, (0,), (0,), (z - 2) / 2)], 1, 1)
    return ClassicalSymbol(z - 2, [c], 1, 1)


def check_family_rho() -> CheckResult:
    def run():
        b = _rho_family(0j)
        fit = tr_family_pole(_rho_family)
        return abs(fit.residue + wodzicki_res(b))

    return _check(5, "res TR((2/rho^2) rho^z) = -Res(2/rho^2)", run, 1e-6)


def check_family_power() -> CheckResult:
    def run():
        a = ho()
        q = ClassicalSymbol(-2, [HomogeneousComponent(-2, [SymbolTerm(2.0, (0,), (0,), -1)], 1, 1)], 1, 1,
                            complete=True)
        fit = tr_family_pole(lambda z: sharp(q, complex_power(a, -z, exact=False), 8))
        return abs(fit.residue - wodzicki_res(q) / 2)

    return _check(5, "res TR(q # a^-z) = (1/m) Res(q) = 1", run, 1e-4)


# ---------------------------------------------------------------------------
# criterion 6


def _projection(a: ClassicalSymbol) -> ClassicalSymbol:
    return sectorial_projection(a, -math.pi / 2, math.pi / 2)


def check_idempotent(a: ClassicalSymbol, label: str) -> CheckResult:
    def run():
        P = _projection(a)
        return symbol_difference(sharp(P, P, 5), P, 5)

    return _check(6, f"Pi # Pi = Pi for {label}", run, 1e-6)


def check_projection_residue(a: ClassicalSymbol, label: str) -> CheckResult:
    return _check(6, f"|2 pi i Res(Pi)| for {label}", lambda: abs(eta_residue_at_zero(a)), 1e-6)


def check_eta_fit(a: ClassicalSymbol, label: str) -> CheckResult:
    return _check(6, f"eta pole fit at 0 (oracle) for {label}", lambda: abs(eta_pole_fit(a).residue), 1e-2)


def check_eta_symmetric() -> CheckResult:
    def run():
        a = registry.diag_harmonic_oscillator((1.0, -1.0))
        return max(abs(eta(a, z).value) for z in (0, 1, 2))

    return _check(6, "eta(diag(HO, -HO), z) = 0 for z = 0, 1, 2", run, 1e-8)


# ---------------------------------------------------------------------------
# criterion 7: calculus


def check_commutator() -> CheckResult:
    def run():
        x = ClassicalSymbol.from_ring(poly({(1, 0): 1.0}))
        xi = ClassicalSymbol.from_ring(poly({(0, 1): 1.0}))
        c = sharp(x, xi).exact.plus(sharp(xi, x).exact.scale(-1.0)).plus(poly({(0, 0): -1j}))
        pts = np.random.default_rng(SEED).normal(size=(16, 2))
        return np.abs(c.evaluate(pts)).max()

    return _check(7, "x # xi - xi # x = i", run, 0.0)


def check_gaussian_composition() -> CheckResult:
    def run():
        rng = np.random.default_rng(SEED)
        worst = 0.0
        for _ in range(6):
            A, B = _random_poly(rng, 2), _random_poly(rng, 3)
            ab = sharp(ClassicalSymbol.from_ring(A), ClassicalSymbol.from_ring(B)).exact
            u = _random_gaussian(rng)
            worst = max(worst, _poly_gap(oracle.apply_symbol(ab, u),
                                         oracle.apply_symbol(A, oracle.apply_symbol(B, u))))
        return worst

    return _check(7, "op(a # b) u = op(a) op(b) u on Gaussian test functions", run, 1e-10)


def check_gaussian_adjoint() -> CheckResult:
    def run():
        rng = np.random.default_rng(SEED + 1)
        worst = 0.0
        for _ in range(6):
            A = _random_poly(rng, 3)
            As = adjoint(ClassicalSymbol.from_ring(A)).exact
            u, v = _random_gaussian(rng), _random_gaussian(rng)
            lhs = oracle.inner(oracle.apply_symbol(A, u), v)
            rhs = oracle.inner(u, oracle.apply_symbol(As, v))
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
        return worst

    return _check(7, "<op(a) u, v> = <u, op(a*) v> on Gaussian test functions", run, 1e-10)


def check_homogeneity() -> CheckResult:
    def run():
        rng = np.random.default_rng(SEED + 2)
        a = ClassicalSymbol.from_ring(_random_poly(rng, 3))
        p = parametrix(ClassicalSymbol.from_ring(poly({(2, 0): 1.0, (0, 2): 1.0, (0, 0): 1.0})), 6)
        worst = 0.0
        pts = rng.normal(size=(8, 2))
        for sym in (sharp(a, p, 6), p):
            for c in sym.components:
                for t in (0.5, 3.0):
                    lhs = c.evaluate(t * pts)
                    rhs = t ** complex(c.degree) * c.evaluate(pts)
                    worst = max(worst, float(np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max())))
        return worst

    return _check(7, "components are homogeneous of their stated degree", run, 1e-12)


def check_associativity() -> CheckResult:
    def run():
        rng = np.random.default_rng(SEED + 3)
        a, b, c = (ClassicalSymbol.from_ring(_random_poly(rng, d)) for d in (2, 3, 2))
        left = sharp(sharp(a, b), c).exact
        right = sharp(a, sharp(b, c)).exact
        pts = rng.normal(size=(16, 2))
        scale = np.abs(left.evaluate(pts)).max()
        return np.abs(left.evaluate(pts) - right.evaluate(pts)).max() / scale

    return _check(7, "(a # b) # c = a # (b # c)", run, 1e-12)


def check_parametrix() -> CheckResult:
    def run():
        a = ClassicalSymbol.from_ring(poly({(2, 0): 1.0, (0, 2): 1.0, (0, 0): 1.0}))
        b = parametrix(a, 8)
        one = ClassicalSymbol.from_ring(poly({(0, 0): 1.0}))
        return max(symbol_difference(sharp(a, b, 8), one, 8), symbol_difference(sharp(b, a, 8), one, 8))

    return _check(7, "parametrix of rho^2 + 1 inverts on both sides to depth 8", run, 1e-10)


# ---------------------------------------------------------------------------
# criterion 7: contours


def _cauchy(spec: ContourSpec, g: Callable, z: complex) -> complex:
    nodes = contour_nodes(spec)
    return complex(np.sum(nodes.weights * nodes.power(z) * g(nodes.lam)))


def check_cauchy_keyhole_closed() -> CheckResult:
    def run():
        spec = ContourSpec("keyhole", math.pi / 2, eps=1.0, panels=10)
        nodes = contour_nodes(spec)
        return abs(np.sum(nodes.weights * nodes.lam**-2.0))

    return _check(7, "keyhole integral of lambda^-2 vanishes", run, 1e-8)


def check_cauchy_sector() -> CheckResult:
    def run():
        spec = ContourSpec("sector", -math.pi / 4, math.pi / 4, eps=0.5, panels=8, tail=32)
        inside = _cauchy(spec, lambda lam: 1 / (lam * (lam - 1.0)), 0)
        outside = _cauchy(spec, lambda lam: 1 / (lam * (lam + 1.0)), 0)
        return max(abs(inside - 1), abs(outside))

    return _check(7, "sector contour: Cauchy integral 1 inside, 0 outside", run, 1e-8)


def check_cauchy_power() -> CheckResult:
    def run():
        worst = 0.0
        for c, z in ((0.5, -2.0), (2.0, -0.5 + 0.3j), (1.5, -1.25)):
            spec = ContourSpec("keyhole", math.pi, eps=0.25, panels=8, tail=32)
            val = _cauchy(spec, lambda lam: 1 / (lam - c) - 1 / lam, z)
            worst = max(worst, abs(val - c**z) / abs(c**z))
        return worst

    return _check(7, "keyhole: (1/2 pi i) int lambda^z / (lambda - c) = c^z", run, 1e-8)


def check_power_leading() -> CheckResult:
    def run():
        P = complex_power(ho(), -1.0, exact=False)
        pts = sphere_grid(1).nodes
        return np.abs(P.components[0].evaluate(pts)[:, 0, 0] - 2.0).max()

    return _check(7, "leading component of HO^-1 is 2/rho^2", run, 1e-8)


# ---------------------------------------------------------------------------
# suites


def regularity_checks(a: ClassicalSymbol, label: str = "symbol") -> list:
    return [check_idempotent(a, label), check_projection_residue(a, label)]


def _diag(c2: float) -> ClassicalSymbol:
    return registry.diag_harmonic_oscillator((1.0, c2))


SUITES: dict[str, list[Callable[[], CheckResult]]] = {
    "oracle": [check_ho_spectrum],
    "calculus": [check_commutator, check_gaussian_composition, check_gaussian_adjoint, check_homogeneity,
                 check_associativity, check_parametrix],
    "contour": [check_cauchy_keyhole_closed, check_cauchy_sector, check_cauchy_power, check_power_leading],
    "functionals": [check_tr_closed_form, check_tr_oracle, check_tr_chi, check_tr_p, check_family_rho,
                    check_family_power],
    "zeta_ho": [check_zeta_oracle, lambda: check_zeta_symbolic(2, 0.02), lambda: check_zeta_symbolic(4, 0.01),
                check_zeta_pole_formula, check_zeta_pole_oracle, check_zeta_pole_symbolic],
    "eta_regularity": [
        lambda: check_idempotent(_diag(-1.0), "diag(HO, -HO)"),
        lambda: check_idempotent(_diag(-2.0), "diag(HO, -2HO)"),
        lambda: check_projection_residue(_diag(-1.0), "diag(HO, -HO)"),
        lambda: check_projection_residue(_diag(-2.0), "diag(HO, -2HO)"),
        lambda: check_eta_fit(_diag(-1.0), "diag(HO, -HO)"),
        lambda: check_eta_fit(_diag(-2.0), "diag(HO, -2HO)"),
        check_eta_symmetric,
    ],
}
SUITE_ORDER = ["oracle", "zeta_ho", "functionals", "eta_regularity", "calculus", "contour"]
SUITE_NAMES = SUITE_ORDER + ["regularity", "all"]
TIME_BUDGET = 600.0


def run_suite(name: str, symbol: ClassicalSymbol | None = None, report: Callable[[CheckResult], None] | None = None
              ) -> list:
    """Run one suite (or ``"all"``) and return its check results.

    ``"regularity"`` needs ``symbol``: it checks ``Pi # Pi = Pi`` and
    ``Res(Pi) = 0`` for the right half-plane projection of that symbol.
    ``"all"`` adds criterion 8, the total wall time.
    """
    if name == "regularity":
        if symbol is None:
            raise ValueError("the regularity suite needs a symbol")
        checks = [lambda: check_idempotent(symbol, symbol.name or "symbol"),
                  lambda: check_projection_residue(symbol, symbol.name or "symbol")]
    elif name == "all":
        checks = [c for s in SUITE_ORDER for c in SUITES[s]]
    elif name in SUITES:
        checks = SUITES[name]
    else:
        raise ValueError(f"unknown suite {name!r}; known: {SUITE_NAMES}")
    t0 = time.perf_counter()
    out = []
    for c in checks:
        r = c()
        out.append(r)
        if report is not None:
            report(r)
    if name == "all":
        total = time.perf_counter() - t0
        r = CheckResult(8, "full suite wall time in seconds", total, TIME_BUDGET,
                        bool(total <= TIME_BUDGET and all(x.passed for x in out)), total)
        out.append(r)
        if report is not None:
            report(r)
    return out
