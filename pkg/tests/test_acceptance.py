"""Numbered acceptance criteria.

A single ``shubin verify --suite all`` run in a subprocess produces every
check; each test below gathers the checks of one criterion, prints one
pass/fail line for it and asserts on it.
"""

import json
import subprocess
import sys
import time

import pytest

import conftest

CRITERIA = {
    1: "harmonic oscillator spectrum from the Hermite matrix",
    2: "zeta of the oscillator is the Riemann zeta function",
    3: "zeta pole at 1 with residue 1",
    4: "Kontsevich-Vishik trace: closed form, oracle, excision and depth independence",
    5: "pole of TR along holomorphic families equals minus the residue",
    6: "idempotent projections have zero residue; eta is regular at 0",
    7: "calculus and contour properties",
    8: "verify --suite all exits 0 within 10 minutes",
}

pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def verify_all(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify") / "verify"
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "shubin.cli", "verify", "--suite", "all", "--output", str(out)],
                          capture_output=True, text=True, timeout=1800)
    wall = time.perf_counter() - t0
    result = json.loads(out.with_name("verify.result.json").read_text())
    return proc, result, wall


def _report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {CRITERIA[criterion]} ({detail})"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.mark.parametrize("criterion", range(1, 8))
def test_criterion(verify_all, criterion):
    _, result, _ = verify_all
    checks = [c for c in result["checks"] if c["criterion"] == criterion]
    assert checks, f"no checks recorded for criterion {criterion}"
    failed = [c["name"] for c in checks if not c["passed"]]
    worst = max(c["measured"] / c["tolerance"] if c["tolerance"] else (0.0 if c["measured"] == 0 else 1e300)
                for c in checks)
    detail = f"{len(checks) - len(failed)}/{len(checks)} checks, worst measured/tolerance {worst:.2e}"
    assert _report(criterion, not failed, detail), f"failed checks: {failed}"


def test_criterion_8(verify_all):
    proc, result, wall = verify_all
    ok = proc.returncode == 0 and wall < 600 and result["status"] == 0
    detail = f"exit {proc.returncode}, {wall:.0f} s"
    assert _report(8, ok, detail), proc.stdout[-2000:] + proc.stderr[-2000:]
