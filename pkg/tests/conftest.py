import math

import numpy as np
import pytest

from shubin import registry
from shubin.symring import ClassicalSymbol, HomogeneousComponent, SymbolTerm, poly

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ho():
    return registry.harmonic_oscillator()


@pytest.fixture(scope="session")
def diag_m1():
    return registry.diag_harmonic_oscillator((1.0, -1.0))


@pytest.fixture(scope="session")
def diag_m2():
    return registry.diag_harmonic_oscillator((1.0, -2.0))


@pytest.fixture(scope="session")
def rho2_plus_1():
    return ClassicalSymbol.from_ring(poly({(2, 0): 1.0, (0, 2): 1.0, (0, 0): 1.0}))


def single(degree, coeff, beta, alpha, s_exp, n=1):
    """Symbol with one ring component ``coeff x^beta xi^alpha rho^(2 s_exp)``."""
    c = HomogeneousComponent(degree, [SymbolTerm(coeff, beta, alpha, s_exp)], n, 1)
    return ClassicalSymbol(degree, [c], n, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


TWO_PI = 2 * math.pi
