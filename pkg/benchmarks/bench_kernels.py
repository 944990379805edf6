"""Compare the compiled and numpy contour kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--depth 8]

Times the contour sum behind a complex power (one resolvent expansion per
sphere node and contour node) for the harmonic oscillator and for a 2 x 2
non-diagonal symbol, and checks that both executors agree.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from shubin import _engine, registry
from shubin.resolvent import ContourSpec, contour_nodes, integrate_components
from shubin.symring import ClassicalSymbol, poly, sphere_grid


def coupled_symbol() -> ClassicalSymbol:
    one = np.eye(2)
    off = np.array([[0.0, 1.0], [1.0, 0.0]])
    return ClassicalSymbol.from_ring(poly({(2, 0): 0.5 * one, (0, 2): 0.5 * one, (0, 0): one, (1, 0): 0.3 * off},
                                          q=2))


def bench(a: ClassicalSymbol, depth: int, repeat: int) -> dict:
    grid = sphere_grid(a.n)
    spec = ContourSpec("keyhole", math.pi, eps=0.25, panels=12, tail=32)
    nodes = contour_nodes(spec)
    fvals = nodes.power(-0.5)
    out, times = {}, {}
    for name in ("numpy", "compiled"):
        if name == "compiled" and not _engine.COMPILED:
            continue
        best = math.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            out[name] = integrate_components(a, grid.nodes, nodes, fvals, depth, backend=name)
            best = min(best, time.perf_counter() - t0)
        times[name] = best
    if len(out) == 2:
        times["max_abs_difference"] = float(np.abs(out["numpy"] - out["compiled"]).max())
    times["evaluations"] = grid.size * nodes.lam.size
    return times


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--depth", type=int, default=8)
    args = p.parse_args()
    print(f"threads = {_engine.thread_count()}, compiled available = {_engine.COMPILED}")
    for label, a in (("harmonic oscillator", registry.harmonic_oscillator()), ("coupled 2x2", coupled_symbol())):
        r = bench(a, args.depth, args.repeat)
        line = f"{label:20s} {r['evaluations']:7d} evaluations  numpy {r['numpy']:.3f} s"
        if "compiled" in r:
            line += (f"  compiled {r['compiled']:.3f} s  speed-up {r['numpy'] / r['compiled']:.1f}x"
                     f"  max |diff| {r['max_abs_difference']:.1e}")
        print(line)


if __name__ == "__main__":
    main()
