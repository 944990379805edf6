# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled replay of resolvent tapes.

Mirrors ``shubin._engine.run_numpy``: each (point, contour node) pair is
processed independently with a private workspace, points are distributed
over threads.
"""

from cython.parallel cimport prange, parallel
from libc.stdlib cimport malloc, free
from libc.string cimport memset

import numpy as np

ctypedef double complex cplx

cdef enum:
    OP_ZERO = 0
    OP_LOAD = 1
    OP_RESOLV = 2
    OP_MUL = 3
    OP_ADDS = 4
    OP_DERIV = 5
    OP_ACCUM = 6


cdef inline double cabs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef int invert(cplx* a, cplx* out, int q, cplx* work) noexcept nogil:
    """Gauss-Jordan inverse with partial pivoting; ``a`` is clobbered."""
    cdef int i, j, k, piv
    cdef double best, v
    cdef cplx f, t
    for i in range(q):
        for j in range(q):
            out[i * q + j] = 1.0 if i == j else 0.0
    for k in range(q):
        piv = k
        best = cabs2(a[k * q + k])
        for i in range(k + 1, q):
            v = cabs2(a[i * q + k])
            if v > best:
                best = v
                piv = i
        if best == 0.0:
            return -1
        if piv != k:
            for j in range(q):
                t = a[k * q + j]; a[k * q + j] = a[piv * q + j]; a[piv * q + j] = t
                t = out[k * q + j]; out[k * q + j] = out[piv * q + j]; out[piv * q + j] = t
        f = 1.0 / a[k * q + k]
        for j in range(q):
            a[k * q + j] = a[k * q + j] * f
            out[k * q + j] = out[k * q + j] * f
        for i in range(q):
            if i != k:
                f = a[i * q + k]
                if f != 0:
                    for j in range(q):
                        a[i * q + j] = a[i * q + j] - f * a[k * q + j]
                        out[i * q + j] = out[i * q + j] - f * out[k * q + j]
    return 0


cdef inline void matmul_add(cplx* c, cplx* a, cplx* b, int q) noexcept nogil:
    cdef int i, j, k
    cdef cplx s
    for i in range(q):
        for j in range(q):
            s = 0
            for k in range(q):
                s = s + a[i * q + k] * b[k * q + j]
            c[i * q + j] = c[i * q + j] + s


cdef void replay(const long[:, ::1] ops, const cplx[::1] scal, const cplx[:, :, :, ::1] cst,
                 cplx lam, cplx fw, const long[:, ::1] pairs, const long[:, ::1] dsrc,
                 const double[:, ::1] dfac, cplx* ws, cplx* tmp, cplx* tmp2, cplx* work,
                 cplx[:, :, :, ::1] outp, int nc, int q, int raw) noexcept nogil:
    cdef int qq = q * q
    cdef int blk = nc * qq
    cdef int nops = ops.shape[0]
    cdef int npairs = pairs.shape[0]
    cdef int o, code, d, a, b, i, j, k, c, r, e, s
    cdef cplx* D
    cdef cplx* A
    cdef cplx* B
    cdef cplx sc
    for o in range(nops):
        code = ops[o, 0]
        d = ops[o, 1]
        a = ops[o, 2]
        b = ops[o, 3]
        D = ws + d * blk
        if code == OP_ZERO:
            for i in range(blk):
                D[i] = 0
        elif code == OP_LOAD:
            for c in range(nc):
                for i in range(q):
                    for j in range(q):
                        D[c * qq + i * q + j] = cst[a, c, i, j]
        elif code == OP_RESOLV:
            for i in range(q):
                for j in range(q):
                    tmp[i * q + j] = -cst[a, 0, i, j]
                tmp[i * q + i] = tmp[i * q + i] + lam
            for i in range(blk):
                D[i] = 0
            invert(tmp, D, q, work)
            # X_k = X_0 sum_{i != 0} C_i X_j over pairs (k, i, j)
            r = 0
            for k in range(1, nc):
                for i in range(qq):
                    tmp[i] = 0
                while r < npairs and pairs[r, 0] < k:
                    r = r + 1
                while r < npairs and pairs[r, 0] == k:
                    i = pairs[r, 1]
                    j = pairs[r, 2]
                    if i != 0:
                        for e in range(qq):
                            tmp2[e] = cst[a, i, e // q, e % q]
                        matmul_add(tmp, tmp2, D + j * qq, q)
                    r = r + 1
                matmul_add(D + k * qq, D, tmp, q)
        elif code == OP_MUL:
            A = ws + a * blk
            B = ws + b * blk
            for i in range(blk):
                tmp[i] = 0
            for r in range(npairs):
                k = pairs[r, 0]
                i = pairs[r, 1]
                j = pairs[r, 2]
                if q == 1:
                    tmp[k] = tmp[k] + A[i] * B[j]
                else:
                    matmul_add(tmp + k * qq, A + i * qq, B + j * qq, q)
            for i in range(blk):
                D[i] = tmp[i]
        elif code == OP_ADDS:
            A = ws + a * blk
            sc = scal[o]
            for i in range(blk):
                D[i] = D[i] + sc * A[i]
        elif code == OP_DERIV:
            A = ws + a * blk
            for c in range(nc):
                s = dsrc[b, c]
                if s >= 0:
                    for e in range(qq):
                        D[c * qq + e] = dfac[b, c] * A[s * qq + e]
                else:
                    for e in range(qq):
                        D[c * qq + e] = 0
        elif code == OP_ACCUM:
            A = ws + a * blk
            for c in range(nc):
                for i in range(q):
                    for j in range(q):
                        outp[d, c, i, j] = outp[d, c, i, j] + fw * A[c * qq + i * q + j]
            if b and not raw:
                for i in range(q):
                    outp[d, 0, i, i] = outp[d, 0, i, i] - fw / lam


def run_tape(const long[:, ::1] ops, const cplx[::1] scal, int nslots,
             const cplx[:, :, :, :, ::1] consts, const cplx[::1] lam, const cplx[::1] fw,
             const long[:, ::1] pairs, const long[:, ::1] dsrc, const double[:, ::1] dfac,
             cplx[:, :, :, :, ::1] out, int nthreads=1):
    """Replay a tape; see ``shubin._engine.run_numpy`` for the layout."""
    cdef Py_ssize_t P = consts.shape[0]
    cdef int nc = consts.shape[2]
    cdef int q = consts.shape[3]
    cdef Py_ssize_t L = lam.shape[0]
    cdef Py_ssize_t p, l
    cdef cplx* ws
    cdef cplx* tmp
    cdef cplx* tmp2
    cdef cplx* work
    cdef size_t wsize = <size_t> nslots * nc * q * q
    if nthreads < 1:
        nthreads = 1
    with nogil, parallel(num_threads=nthreads):
        ws = <cplx*> malloc(wsize * sizeof(cplx) + 1)
        tmp = <cplx*> malloc(<size_t> nc * q * q * sizeof(cplx) + 1)
        tmp2 = <cplx*> malloc(<size_t> q * q * sizeof(cplx) + 1)
        work = <cplx*> malloc(<size_t> q * q * sizeof(cplx) + 1)
        for p in prange(P, schedule="dynamic"):
            memset(ws, 0, wsize * sizeof(cplx))
            for l in range(L):
                replay(ops, scal, consts[p], lam[l], fw[l], pairs, dsrc, dfac, ws, tmp, tmp2, work,
                       out[p], nc, q, 0)
        free(ws)
        free(tmp)
        free(tmp2)
        free(work)
    return out


def run_tape_raw(const long[:, ::1] ops, const cplx[::1] scal, int nslots,
                 const cplx[:, :, :, :, ::1] consts, const cplx[::1] lam,
                 const long[:, ::1] pairs, const long[:, ::1] dsrc, const double[:, ::1] dfac,
                 cplx[:, :, :, :, :, ::1] out, int nthreads=1):
    """Replay a tape without contour summation; ``out`` has shape (P, L, nout, ncoef, q, q)."""
    cdef Py_ssize_t P = consts.shape[0]
    cdef int nc = consts.shape[2]
    cdef int q = consts.shape[3]
    cdef Py_ssize_t L = lam.shape[0]
    cdef Py_ssize_t p, l
    cdef cplx* ws
    cdef cplx* tmp
    cdef cplx* tmp2
    cdef cplx* work
    cdef cplx one = 1.0
    cdef size_t wsize = <size_t> nslots * nc * q * q
    if nthreads < 1:
        nthreads = 1
    with nogil, parallel(num_threads=nthreads):
        ws = <cplx*> malloc(wsize * sizeof(cplx) + 1)
        tmp = <cplx*> malloc(<size_t> nc * q * q * sizeof(cplx) + 1)
        tmp2 = <cplx*> malloc(<size_t> q * q * sizeof(cplx) + 1)
        work = <cplx*> malloc(<size_t> q * q * sizeof(cplx) + 1)
        for p in prange(P, schedule="dynamic"):
            memset(ws, 0, wsize * sizeof(cplx))
            for l in range(L):
                replay(ops, scal, consts[p], lam[l], one, pairs, dsrc, dfac, ws, tmp, tmp2, work,
                       out[p, l], nc, q, 1)
        free(ws)
        free(tmp)
        free(tmp2)
        free(work)
    return out
