"""Command-line front end.

Every command reads a symbol JSON file (``--symbol``), runs one computation
and writes ``{prefix}.result.json``; commands that sample a meromorphic
function also write ``{prefix}.samples.csv``.  Exit status is 0 on success,
2 on invalid input and 3 on a numerical failure; failures are recorded in
the result file with a machine-readable ``code``.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import _engine, oracle
from .acceptance import SUITE_NAMES, run_suite
from .calculus import sharp, symbol_difference
from .errors import NumericalError, ShubinError, ValidationError
from .functionals import kv_tr_detailed, wodzicki_res
from .io import dumps, encode_complex, load_symbol
from .powers import DEFAULT_COMPONENTS, complex_power, sectorial_projection
from .spectra import eta, sample_table, zeta, zeta_pole
from .symring import sphere_grid

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
CSV_COLUMNS = ["re_z", "im_z", "re_val", "im_val", "uncertainty", "method"]
SAMPLE_NODES = 16


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def parse_complex_list(text: str) -> list:
    return [parse_complex(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shubin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, symbol_required=True):
        sp.add_argument("--symbol", required=symbol_required, help="symbol JSON file")
        sp.add_argument("--output", default="shubin", help="output path prefix (default: %(default)s)")
        sp.add_argument("--format", choices=["json", "csv", "both"], default="both",
                        help="result.json is always written; csv/both add the samples table")
        sp.add_argument("--no-timing", action="store_true",
                        help="write wall_time as null so identical runs give identical files")
        sp.add_argument("--backend", choices=["compiled", "numpy"], default=None,
                        help="contour kernel executor (default: compiled when available)")

    sp = sub.add_parser("residue", help="Wodzicki residue")
    common(sp)

    sp = sub.add_parser("kv", help="Kontsevich-Vishik trace")
    common(sp)
    sp.add_argument("--p", type=int, default=None, help="subtracted components (default: minimal)")

    for name, helptext in (("power", "complex power a^z"), ("project", "sectorial projection")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--depth", type=int, default=DEFAULT_COMPONENTS)
        if name == "power":
            sp.add_argument("--z", type=parse_complex, required=True)
            sp.add_argument("--theta", type=float, default=math.pi)
        else:
            sp.add_argument("--theta", type=float, default=-math.pi / 2)
            sp.add_argument("--theta-prime", type=float, default=math.pi / 2)

    for name in ("zeta", "eta"):
        sp = sub.add_parser(name, help=f"{name} function samples")
        common(sp)
        sp.add_argument("--z", type=parse_complex_list, required=True, help="comma-separated points")
        sp.add_argument("--theta", type=float, default=math.pi if name == "zeta" else math.pi / 2)
        if name == "eta":
            sp.add_argument("--theta-down", type=float, default=None,
                            help="second branch; the spread is added to the uncertainty")
        sp.add_argument("--depth", type=int, default=DEFAULT_COMPONENTS)
        sp.add_argument("--method", choices=["symbolic", "oracle"], default="symbolic")
        sp.add_argument("--N", type=int, default=400, help="oracle basis size")

    sp = sub.add_parser("poles", help="poles of zeta at (2n - j)/m")
    common(sp)
    sp.add_argument("--j", type=lambda s: [int(v) for v in s.split(",")], default=[0, 1])
    sp.add_argument("--theta", type=float, default=math.pi)
    sp.add_argument("--depth", type=int, default=DEFAULT_COMPONENTS)
    sp.add_argument("--h", type=float, default=0.01)
    sp.add_argument("--method", choices=["symbolic", "oracle"], default="symbolic")
    sp.add_argument("--N", type=int, default=400)

    sp = sub.add_parser("oracle", help="Hermite-basis spectral data")
    common(sp)
    sp.add_argument("--N", type=int, default=400)
    sp.add_argument("--kind", choices=["eigenvalues", "zeta", "eta", "trace"], default="eigenvalues")
    sp.add_argument("--z", type=parse_complex_list, default=[2 + 0j])
    sp.add_argument("--theta", type=float, default=math.pi)
    sp.add_argument("--count", type=int, default=20)

    sp = sub.add_parser("verify", help="acceptance suites")
    common(sp, symbol_required=False)
    sp.add_argument("--suite", choices=SUITE_NAMES, default="all")
    return p


# ---------------------------------------------------------------------------
# commands; each returns (payload, samples)


def _check_positive(name, value):
    if value <= 0:
        raise ValidationError(f"--{name} must be positive")


def _component_table(a, count: int = SAMPLE_NODES) -> list:
    grid = sphere_grid(a.n, count) if a.n == 1 else sphere_grid(a.n)
    out = []
    for k, c in enumerate(a.components):
        out.append({"k": k, "degree": encode_complex(c.degree), "nodes": grid.nodes,
                    "values": c.evaluate(grid.nodes)})
    return out


def cmd_residue(args):
    a = load_symbol(args.symbol)
    return {"value": wodzicki_res(a), "uncertainty": 0.0, "method": "sphere_quadrature"}, []


def cmd_kv(args):
    a = load_symbol(args.symbol)
    if args.p is not None and args.p < 0:
        raise ValidationError("--p must be nonnegative")
    r = kv_tr_detailed(a, p=args.p)
    return {"value": r.value, "uncertainty": r.uncertainty, "method": "finite_part", "p": r.p,
            "radius": r.radius}, []


def cmd_power(args):
    a = load_symbol(args.symbol)
    _check_positive("depth", args.depth)
    P = complex_power(a, args.z, args.theta, args.depth, exact=False, backend=args.backend)
    lead = P.components[0].evaluate(np.array([[1.0] + [0.0] * (2 * a.n - 1)]))[0]
    return {"value": lead, "uncertainty": 0.0, "method": "contour", "order": P.order,
            "components": _component_table(P)}, []


def cmd_project(args):
    a = load_symbol(args.symbol)
    _check_positive("depth", args.depth)
    Pi = sectorial_projection(a, args.theta, args.theta_prime, args.depth, backend=args.backend)
    res = wodzicki_res(Pi)
    idem = symbol_difference(sharp(Pi, Pi, min(5, args.depth)), Pi, min(5, args.depth))
    return {"value": res, "uncertainty": 0.0, "method": "contour", "two_pi_i_res": 2j * math.pi * res,
            "idempotency_deviation": idem, "components": _component_table(Pi)}, []


def _samples_payload(samples, method):
    if not samples:
        raise NumericalError("no sample could be computed")
    first = samples[0]
    return {"value": first.value, "uncertainty": first.truncation_uncertainty, "method": first.method or method,
            "samples": [{"z": s.z, "value": s.value, "uncertainty": s.truncation_uncertainty, "method": s.method}
                        for s in samples]}


def cmd_zeta(args):
    a = load_symbol(args.symbol)
    samples = sample_table(lambda z: zeta(a, z, args.theta, args.depth, args.method, oracle_size=args.N,
                                          backend=args.backend), args.z)
    return _samples_payload(samples, args.method), samples


def cmd_eta(args):
    a = load_symbol(args.symbol)
    samples = sample_table(lambda z: eta(a, z, args.theta, args.theta_down, args.depth, args.method,
                                         oracle_size=args.N, backend=args.backend), args.z)
    return _samples_payload(samples, args.method), samples


def cmd_poles(args):
    a = load_symbol(args.symbol)
    reports, samples = [], []
    for j in args.j:
        rep = zeta_pole(a, j, args.theta, args.depth, args.h, args.method, args.N, args.backend)
        reports.append({"j": rep.j, "location": rep.location, "residue": rep.residue,
                        "predicted_location": rep.predicted_location,
                        "residue_formula_value": rep.residue_formula_value})
        samples.extend(rep.samples)
    first = reports[0]
    return {"value": first["residue"], "uncertainty": abs(first["residue"] - first["residue_formula_value"]),
            "method": args.method, "poles": reports}, samples


def cmd_oracle(args):
    a = load_symbol(args.symbol)
    _check_positive("N", args.N)
    d = oracle.discretize(a, args.N)
    if args.kind == "eigenvalues":
        ev = oracle.eigenvalues(d)[: args.count]
        return {"value": ev, "uncertainty": 0.0, "method": "oracle", "hermitian": d.hermitian}, []
    if args.kind == "trace":
        r = oracle.trace(d)
        return {"value": r.value, "uncertainty": r.uncertainty, "method": "oracle", "count": r.count}, []
    samples = sample_table(lambda z: zeta(a, z, args.theta, method="oracle", oracle_size=args.N)
                           if args.kind == "zeta" else eta(a, z, method="oracle", oracle_size=args.N), args.z)
    return _samples_payload(samples, "oracle"), samples


def cmd_verify(args):
    symbol = load_symbol(args.symbol) if args.symbol else None
    if args.suite == "regularity" and symbol is None:
        raise ValidationError("the regularity suite needs --symbol")
    results = run_suite(args.suite, symbol, report=lambda r: print(r.line(), flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    payload = {"value": len(failed) == 0, "uncertainty": 0.0, "method": "acceptance",
               "checks": [{"criterion": r.criterion, "name": r.name, "measured": r.measured,
                           "tolerance": r.tolerance, "passed": r.passed} for r in results]}
    return payload, []


COMMANDS = {"residue": cmd_residue, "kv": cmd_kv, "power": cmd_power, "project": cmd_project, "zeta": cmd_zeta,
            "eta": cmd_eta, "poles": cmd_poles, "oracle": cmd_oracle, "verify": cmd_verify}


# ---------------------------------------------------------------------------
# output


def config_echo(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())}
    cfg["backend"] = args.backend or _engine.backend_name()
    cfg["threads"] = _engine.thread_count()
    if cfg.get("symbol"):
        cfg["symbol"] = str(cfg["symbol"])
    return cfg


def write_samples(path: Path, samples) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for s in samples:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in s.row()])


def _jsonable_float(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


def run(args) -> int:
    """Execute a parsed command line and write its artifacts."""
    t0 = time.perf_counter()
    samples = []
    try:
        payload, samples = COMMANDS[args.command](args)
        status = EXIT_OK
        if args.command == "verify" and not payload["value"]:
            status = EXIT_NUMERICAL
    except ValidationError as exc:
        payload, status = {"value": None, "uncertainty": None, "method": None,
                           "error": {"code": exc.code, "message": str(exc)}}, EXIT_VALIDATION
    except (NumericalError, ShubinError, FloatingPointError, np.linalg.LinAlgError) as exc:
        code = getattr(exc, "code", "numerical")
        payload, status = {"value": None, "uncertainty": None, "method": None,
                           "error": {"code": code, "message": str(exc)}}, EXIT_NUMERICAL
    wall = time.perf_counter() - t0
    payload["wall_time"] = None if args.no_timing else wall
    payload["config_echo"] = config_echo(args)
    payload["status"] = status
    if "uncertainty" in payload:
        payload["uncertainty"] = _jsonable_float(payload["uncertainty"])
    prefix = Path(args.output)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True)
    Path(f"{prefix}.result.json").write_text(dumps(payload))
    if samples and args.format in ("csv", "both"):
        write_samples(Path(f"{prefix}.samples.csv"), samples)
    if "error" in payload:
        print(f"error [{payload['error']['code']}]: {payload['error']['message']}", file=sys.stderr)
    elif args.command != "verify":
        print(f"value = {payload['value']!r}  uncertainty = {payload['uncertainty']!r}")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
