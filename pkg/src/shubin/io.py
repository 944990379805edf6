"""JSON symbol definitions and result serialisation.

Symbol files look like::

    {"n": 1, "q": 1, "order": [2, 0],
     "components": [{"degree": [2, 0], "terms": [
         {"coeff": [[[0.5, 0]]], "beta": [0], "alpha": [0], "s_exp": [1, 0]}]}],
     "exact": "ho",
     "excision": {"r0": 0.5, "r1": 1.0}}

``exact`` names a registered evaluator (optionally ``{"name": ..., "params":
{...}}``).  When ``components`` is omitted the registered symbol is used as
is.  Complex numbers are ``[re, im]`` pairs; plain reals are accepted too.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import registry
from .errors import InvalidSymbol, ValidationError
from .symring import ClassicalSymbol, ExcisionProfile, HomogeneousComponent, RingFull, SymbolTerm


def _complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise InvalidSymbol(f"expected a number or [re, im], got {v!r}")


def _matrix(v) -> np.ndarray:
    if isinstance(v, (int, float)) or (isinstance(v, list) and len(v) == 2 and
                                       all(isinstance(x, (int, float)) for x in v)):
        return np.array([[_complex(v)]])
    try:
        return np.array([[_complex(x) for x in row] for row in v], dtype=complex)
    except TypeError:
        raise InvalidSymbol(f"bad coefficient matrix {v!r}") from None


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _exact_spec(spec):
    if spec is None:
        return None, {}
    if isinstance(spec, str):
        return spec, {}
    if isinstance(spec, dict) and "name" in spec:
        return spec["name"], dict(spec.get("params", {}))
    raise InvalidSymbol(f"bad exact specification {spec!r}")


def symbol_from_dict(d: dict) -> ClassicalSymbol:
    """Build a symbol from the JSON structure described in the module docstring."""
    if not isinstance(d, dict):
        raise InvalidSymbol("symbol definition must be a JSON object")
    name, params = _exact_spec(d.get("exact"))
    excision = None
    if "excision" in d:
        e = d["excision"]
        excision = ExcisionProfile(float(e.get("r0", 0.5)), float(e.get("r1", 1.0)), int(e.get("smoothness", 3)))
    reg = registry.build(name, params) if name is not None else None
    if "components" not in d:
        if reg is None:
            raise InvalidSymbol("a symbol needs components or a registered exact evaluator")
        return reg.with_excision(excision) if excision is not None else reg
    n = int(d.get("n", 1))
    q = int(d.get("q", 1))
    comps = []
    for c in d["components"]:
        terms = [
            SymbolTerm(_matrix(t["coeff"]), t.get("beta", [0] * n), t.get("alpha", [0] * n),
                       _complex(t.get("s_exp", 0)))
            for t in c.get("terms", [])
        ]
        comps.append(HomogeneousComponent(_complex(c["degree"]), terms, n, q))
    order = _complex(d["order"]) if "order" in d else comps[0].degree
    exact = reg.exact if reg is not None else None
    complete = bool(d.get("complete", False))
    if exact is None and complete and all(c.is_smooth for c in comps):
        terms = [t for c in comps for t in c.terms]
        exact = RingFull(terms, n, q)
    return ClassicalSymbol(order, comps, n, q, exact=exact, excision=excision, complete=complete,
                           name=d.get("name") or name)


def symbol_to_dict(a: ClassicalSymbol) -> dict:
    """Inverse of :func:`symbol_from_dict` for symbols with ring components."""
    if not a.is_ring:
        raise InvalidSymbol("only symbols with ring components can be written as JSON")
    comps = []
    for c in a.components:
        comps.append({
            "degree": encode_complex(c.degree),
            "terms": [{
                "coeff": [[encode_complex(x) for x in row] for row in t.coeff],
                "beta": list(t.beta), "alpha": list(t.alpha), "s_exp": encode_complex(t.s_exp),
            } for t in c.terms],
        })
    out = {"n": a.n, "q": a.q, "order": encode_complex(a.order), "components": comps,
           "complete": a.complete,
           "excision": {"r0": a.excision.r0, "r1": a.excision.r1, "smoothness": a.excision.smoothness}}
    if a.name:
        out["name"] = a.name
    return out


DATA_DIR = Path(__file__).parent / "data"


def load_symbol(path) -> ClassicalSymbol:
    """Read a symbol file; bare names of bundled files (``ho.json``) also work."""
    p = Path(path)
    if not p.is_file() and p.parent == Path(".") and (DATA_DIR / p.name).is_file():
        p = DATA_DIR / p.name
    if not p.is_file():
        raise ValidationError(f"symbol file {p} does not exist")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSymbol(f"{p}: {exc}") from None
    return symbol_from_dict(data)


def to_jsonable(obj):
    """Recursively convert numpy and complex values for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, full float precision)."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"
