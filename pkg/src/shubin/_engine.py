"""Truncated Taylor arithmetic and the resolvent tape executor.

The resolvent recursion only ever multiplies, differentiates and inverts
truncated Taylor series with ``q x q`` matrix coefficients.  A *tape* records
those operations once; an executor then replays it for every (point,
contour node) pair and accumulates the weighted contour sum.

Two executors exist: a compiled one (``shubin._kernels``) and a vectorised
numpy fallback defined here.  :func:`get_executor` picks the compiled one
when it imports.
"""

from __future__ import annotations

import itertools
import math
import os

import numpy as np

OP_ZERO, OP_LOAD, OP_RESOLV, OP_MUL, OP_ADDS, OP_DERIV, OP_ACCUM = range(7)

_MEMORY_BUDGET = 256 * 2**20


def thread_count() -> int:
    """Worker threads requested through ``SHUBIN_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SHUBIN_THREADS", "1")))
    except ValueError:
        return 1


class TaylorSpace:
    """Monomials of total degree ``<= order`` in ``nvars`` variables.

    Coefficients are stored normalised, ``c_gamma = d^gamma f / gamma!``.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = int(nvars)
        self.order = int(order)
        idx = []
        for d in range(self.order + 1):
            for g in itertools.product(range(d + 1), repeat=self.nvars):
                if sum(g) == d:
                    idx.append(g)
        idx.sort(key=lambda g: (sum(g), tuple(-x for x in g)))
        if self.nvars == 0:
            idx = [()]
        self.indices = idx
        self.pos = {g: i for i, g in enumerate(idx)}
        pairs = []
        for i, gi in enumerate(idx):
            for j, gj in enumerate(idx):
                g = tuple(a + b for a, b in zip(gi, gj))
                if sum(g) <= self.order:
                    pairs.append((self.pos[g], i, j))
        pairs.sort()
        self.pairs = np.array(pairs, dtype=np.int64).reshape(-1, 3)
        # derivative tables: dst <- factor * src
        dsrc = np.full((max(self.nvars, 1), len(idx)), -1, dtype=np.int64)
        dfac = np.zeros((max(self.nvars, 1), len(idx)))
        for v in range(self.nvars):
            for i, g in enumerate(idx):
                up = list(g)
                up[v] += 1
                up = tuple(up)
                if up in self.pos:
                    dsrc[v, i] = self.pos[up]
                    dfac[v, i] = g[v] + 1
        self.dsrc, self.dfac = dsrc, dfac
        self.degrees = np.array([sum(g) for g in idx], dtype=np.int64)

    @property
    def size(self) -> int:
        return len(self.indices)

    def factorials(self) -> np.ndarray:
        return np.array([math.prod(math.factorial(x) for x in g) for g in self.indices], dtype=float)


class Tape:
    """Straight-line program over Taylor-series slots.

    Slots hold series whose coefficients are ``q x q`` matrices.  Constants
    are indexed by arbitrary hashable keys; the caller supplies their Taylor
    coefficients per point.
    """

    def __init__(self, space: TaylorSpace, q: int):
        self.space = space
        self.q = int(q)
        self.ops: list = []
        self.scalars: list = []
        self.const_keys: list = []
        self._const_pos: dict = {}
        self.nslots = 0
        self.lam_dep: list = []
        self.nout = 0
        self.out_keys: list = []

    def _slot(self, lam: bool) -> int:
        self.nslots += 1
        self.lam_dep.append(lam)
        return self.nslots - 1

    def _emit(self, code, dst, a=0, b=0, scalar=0.0):
        self.ops.append((code, dst, a, b))
        self.scalars.append(complex(scalar))

    def const(self, key) -> int:
        if key not in self._const_pos:
            self._const_pos[key] = len(self.const_keys)
            self.const_keys.append(key)
        return self._const_pos[key]

    def load(self, key) -> int:
        s = self._slot(False)
        self._emit(OP_LOAD, s, self.const(key))
        return s

    def resolvent(self, key) -> int:
        """Series of ``(lambda - C)^(-1)`` for the constant ``C``."""
        s = self._slot(True)
        self._emit(OP_RESOLV, s, self.const(key))
        return s

    def zero(self) -> int:
        s = self._slot(False)
        self._emit(OP_ZERO, s)
        return s

    def mul(self, a: int, b: int) -> int:
        s = self._slot(self.lam_dep[a] or self.lam_dep[b])
        self._emit(OP_MUL, s, a, b)
        return s

    def add_scaled(self, dst: int, src: int, c: complex = 1.0) -> None:
        self.lam_dep[dst] = self.lam_dep[dst] or self.lam_dep[src]
        self._emit(OP_ADDS, dst, src, 0, c)

    def deriv(self, src: int, var: int) -> int:
        s = self._slot(self.lam_dep[src])
        self._emit(OP_DERIV, s, src, var)
        return s

    def accumulate(self, src: int, subtract_pole: bool = False, key=None) -> int:
        """Add ``sum_l w_l (slot - [subtract] I / lambda_l)`` to a new output."""
        o = self.nout
        self.nout += 1
        self.out_keys.append(key)
        self._emit(OP_ACCUM, o, src, int(bool(subtract_pole)))
        return o

    def arrays(self):
        ops = np.array(self.ops, dtype=np.int64).reshape(-1, 4)
        scal = np.array(self.scalars, dtype=complex)
        return ops, scal


# ---------------------------------------------------------------------------
# numpy executor


def _series_mul(space, a, b, q):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for k, i, j in space.pairs:
        if q == 1:
            out[k] += a[i] * b[j]
        else:
            out[k] += a[i] @ b[j]
    return out


def _series_resolvent(space, C, lam, q):
    # C: (ncoef, P, 1, q, q); lam: (L,)
    eye = np.eye(q)
    lamI = lam[None, :, None, None] * eye
    if q == 1:
        X0 = 1.0 / (lamI - C[0])
    else:
        X0 = np.linalg.inv(lamI - C[0])
    X = np.zeros((space.size,) + X0.shape, dtype=complex)
    X[0] = X0
    pairs = space.pairs
    for k in range(1, space.size):
        acc = None
        for kk, i, j in pairs[pairs[:, 0] == k]:
            if i == 0:
                continue
            t = C[i] * X[j] if q == 1 else C[i] @ X[j]
            acc = t if acc is None else acc + t
        X[k] = X0 * acc if q == 1 else X0 @ acc
    return X


def run_numpy(tape: Tape, consts: np.ndarray, lam: np.ndarray, fw: np.ndarray, raw: bool = False) -> np.ndarray:
    """Replay ``tape`` for all points and contour nodes.

    Parameters
    ----------
    consts : ndarray, shape (P, nconst, ncoef, q, q)
    lam, fw : ndarray, shape (L,)
        Contour nodes and weights (already multiplied by the integrand
        factor).

    raw : bool
        Return the unsummed series of each output slot instead, with shape
        ``(P, nout, ncoef, L, q, q)``.

    Returns
    -------
    ndarray, shape (P, nout, ncoef, q, q)
    """
    space, q = tape.space, tape.q
    P = consts.shape[0]
    L = lam.shape[0]
    nc = space.size
    if raw:
        out = np.zeros((P, tape.nout, nc, L, q, q), dtype=complex)
    else:
        out = np.zeros((P, tape.nout, nc, q, q), dtype=complex)
    nlam = max(1, sum(tape.lam_dep))
    per_point = nlam * nc * L * q * q * 16 * 2
    chunk = max(1, min(P, _MEMORY_BUDGET // max(per_point, 1)))
    ops, scal = tape.arrays()
    eye = np.eye(q)
    for p0 in range(0, P, chunk):
        p1 = min(P, p0 + chunk)
        C = np.moveaxis(consts[p0:p1], 2, 0)[:, :, :, None]  # (nconst->) handled below
        # C has shape (ncoef, Pc, nconst, 1, q, q)
        slots: list = [None] * tape.nslots
        for (code, d, a, b), c in zip(ops, scal):
            if code == OP_LOAD:
                slots[d] = C[:, :, a]
            elif code == OP_RESOLV:
                slots[d] = _series_resolvent(space, C[:, :, a], lam, q)
            elif code == OP_ZERO:
                slots[d] = np.zeros((nc, p1 - p0, 1, q, q), dtype=complex)
            elif code == OP_MUL:
                slots[d] = _series_mul(space, slots[a], slots[b], q)
            elif code == OP_ADDS:
                slots[d] = slots[d] + c * slots[a]
            elif code == OP_DERIV:
                src = slots[a]
                new = np.zeros_like(src)
                for i in range(nc):
                    s = space.dsrc[b, i]
                    if s >= 0:
                        new[i] = space.dfac[b, i] * src[s]
                slots[d] = new
            elif code == OP_ACCUM:
                val = np.broadcast_to(slots[a], (nc, p1 - p0, L, q, q))
                if raw:
                    out[p0:p1, d] = np.moveaxis(val, 0, 1)
                    continue
                acc = np.einsum("cplij,l->pcij", val, fw)
                if b:
                    acc[:, 0] -= np.sum(fw / lam) * eye
                out[p0:p1, d] += acc
        del slots
    return out


# ---------------------------------------------------------------------------
# backend selection

try:  # pragma: no cover - depends on the build
    from . import _kernels as _compiled

    COMPILED = True
except ImportError:  # pragma: no cover
    _compiled = None
    COMPILED = False


def run_compiled(tape: Tape, consts: np.ndarray, lam: np.ndarray, fw: np.ndarray) -> np.ndarray:
    space = tape.space
    ops, scal = tape.arrays()
    out = np.zeros((consts.shape[0], tape.nout, space.size, tape.q, tape.q), dtype=complex)
    _compiled.run_tape(
        np.ascontiguousarray(ops),
        np.ascontiguousarray(scal),
        tape.nslots,
        np.ascontiguousarray(consts, dtype=complex),
        np.ascontiguousarray(lam, dtype=complex),
        np.ascontiguousarray(fw, dtype=complex),
        np.ascontiguousarray(space.pairs),
        np.ascontiguousarray(space.dsrc),
        np.ascontiguousarray(space.dfac),
        out,
        thread_count(),
    )
    return out


def run_compiled_raw(tape: Tape, consts: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Compiled counterpart of ``run_numpy(..., raw=True)``."""
    space = tape.space
    ops, scal = tape.arrays()
    P, L = consts.shape[0], lam.shape[0]
    out = np.zeros((P, L, tape.nout, space.size, tape.q, tape.q), dtype=complex)
    _compiled.run_tape_raw(
        np.ascontiguousarray(ops),
        np.ascontiguousarray(scal),
        tape.nslots,
        np.ascontiguousarray(consts, dtype=complex),
        np.ascontiguousarray(lam, dtype=complex),
        np.ascontiguousarray(space.pairs),
        np.ascontiguousarray(space.dsrc),
        np.ascontiguousarray(space.dfac),
        out,
        thread_count(),
    )
    return np.moveaxis(out, 1, 3)


def run_tape_raw(tape: Tape, consts, lam, backend: str | None = None) -> np.ndarray:
    """Unsummed tape outputs, shape ``(P, nout, ncoef, L, q, q)``."""
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    consts = np.asarray(consts, dtype=complex)
    if get_executor(backend) is run_compiled:
        return run_compiled_raw(tape, consts, lam)
    return run_numpy(tape, consts, lam, np.ones_like(lam), raw=True)


def get_executor(name: str | None = None):
    """Return the tape executor.

    ``name`` may be ``"compiled"`` or ``"numpy"``; by default the
    ``SHUBIN_BACKEND`` environment variable decides, then the compiled
    executor is preferred when available.
    """
    name = name or os.environ.get("SHUBIN_BACKEND") or ("compiled" if COMPILED else "numpy")
    if name == "compiled":
        if not COMPILED:
            raise ImportError("compiled kernels are not built")
        return run_compiled
    if name == "numpy":
        return run_numpy
    raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return os.environ.get("SHUBIN_BACKEND") or ("compiled" if COMPILED else "numpy")


def run_tape(tape: Tape, consts, lam, fw, backend: str | None = None) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    fw = np.asarray(fw, dtype=complex).reshape(-1)
    consts = np.asarray(consts, dtype=complex)
    return get_executor(backend)(tape, consts, lam, fw)
