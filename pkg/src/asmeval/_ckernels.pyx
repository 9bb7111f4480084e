# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: expression-tape evaluation and edit distance."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint64_t

cnp.import_array()

# Tape opcodes; must match asmeval.tape.
cdef enum:
    T_CONST = 0
    T_SYM = 1
    T_NOT = 2
    T_NEG = 3
    T_EXTRACT = 4
    T_ZEXT = 5
    T_SEXT = 6
    T_ADD = 7
    T_SUB = 8
    T_MUL = 9
    T_AND = 10
    T_OR = 11
    T_XOR = 12
    T_SHL = 13
    T_LSHR = 14
    T_CONCAT = 15
    T_EQ = 16
    T_ULT = 17
    T_SLT = 18
    T_ITE = 19


cdef inline uint64_t _mask(int w) nogil:
    if w >= 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return (<uint64_t>1 << w) - 1


def eval_tape(int32_t[::1] op, int32_t[::1] a, int32_t[::1] b, int32_t[::1] c,
              int32_t[::1] p, int32_t[::1] w, uint64_t[::1] k, uint64_t[:, ::1] inputs):
    cdef Py_ssize_t n = op.shape[0]
    cdef Py_ssize_t ns = inputs.shape[1]
    out_arr = np.zeros((n, ns), dtype=np.uint64)
    cdef uint64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef int o, sh
    cdef uint64_t m, x, y, hi
    with nogil:
        for i in range(n):
            o = op[i]
            m = _mask(w[i])
            if o == T_CONST:
                for j in range(ns):
                    out[i, j] = k[i]
            elif o == T_SYM:
                for j in range(ns):
                    out[i, j] = inputs[a[i], j] & m
            elif o == T_NOT:
                for j in range(ns):
                    out[i, j] = (~out[a[i], j]) & m
            elif o == T_NEG:
                for j in range(ns):
                    out[i, j] = (<uint64_t>0 - out[a[i], j]) & m
            elif o == T_EXTRACT:
                for j in range(ns):
                    out[i, j] = (out[a[i], j] >> p[i]) & m
            elif o == T_ZEXT:
                for j in range(ns):
                    out[i, j] = out[a[i], j]
            elif o == T_SEXT:
                hi = m & ~_mask(p[i])
                for j in range(ns):
                    x = out[a[i], j]
                    if (x >> (p[i] - 1)) & 1:
                        x = x | hi
                    out[i, j] = x
            elif o == T_ITE:
                for j in range(ns):
                    out[i, j] = out[b[i], j] if out[a[i], j] != 0 else out[c[i], j]
            else:
                for j in range(ns):
                    x = out[a[i], j]
                    y = out[b[i], j]
                    if o == T_ADD:
                        out[i, j] = (x + y) & m
                    elif o == T_SUB:
                        out[i, j] = (x - y) & m
                    elif o == T_MUL:
                        out[i, j] = (x * y) & m
                    elif o == T_AND:
                        out[i, j] = x & y
                    elif o == T_OR:
                        out[i, j] = x | y
                    elif o == T_XOR:
                        out[i, j] = x ^ y
                    elif o == T_SHL:
                        out[i, j] = 0 if y >= <uint64_t>w[i] else (x << y) & m
                    elif o == T_LSHR:
                        out[i, j] = 0 if y >= <uint64_t>w[i] else x >> y
                    elif o == T_CONCAT:
                        out[i, j] = (x << p[i]) | y
                    elif o == T_EQ:
                        out[i, j] = 1 if x == y else 0
                    elif o == T_ULT:
                        out[i, j] = 1 if x < y else 0
                    elif o == T_SLT:
                        sh = 64 - p[i]
                        out[i, j] = 1 if <int64_t>(x << sh) < <int64_t>(y << sh) else 0
    return out_arr


def levenshtein(str s, str t):
    """Character-level edit distance (insert, delete, substitute; unit costs)."""
    if len(s) < len(t):
        s, t = t, s
    cdef Py_ssize_t n = len(s), mlen = len(t)
    if mlen == 0:
        return n
    cdef Py_ssize_t[::1] prev = np.arange(mlen + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] cur = np.zeros(mlen + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] tmp
    cdef Py_ssize_t i, j, best, v
    cdef Py_UCS4 cs
    cdef cnp.uint32_t[::1] tt
    tarr = np.array([ord(ch) for ch in t], dtype=np.uint32)
    tt = tarr
    for i in range(1, n + 1):
        cs = s[i - 1]
        cur[0] = i
        for j in range(1, mlen + 1):
            best = prev[j] + 1
            v = cur[j - 1] + 1
            if v < best:
                best = v
            v = prev[j - 1] + (0 if <cnp.uint32_t>cs == tt[j - 1] else 1)
            if v < best:
                best = v
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[mlen]
