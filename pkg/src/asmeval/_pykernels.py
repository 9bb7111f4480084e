"""Pure-Python/numpy implementations of the hot kernels.

Same contracts as the compiled ``_ckernels`` module; used when the extension
is not built or ``ASMEVAL_PURE=1`` is set.
"""

import numpy as np

from .tape import (
    ADD, AND, CONCAT, CONST, EQ, EXTRACT, ITE, LSHR, MUL, NEG, NOT, OR, SEXT, SHL, SLT, SUB,
    SYM, ULT, XOR, ZEXT,
)

_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mask(w):
    w = int(w)
    return _ONES if w >= 64 else np.uint64((1 << w) - 1)


def eval_tape(op, a, b, c, p, w, k, inputs):
    """Evaluate a flattened expression tape on every sample column.

    Returns a ``(len(op), n_samples)`` uint64 array of node values.
    """
    n = len(op)
    ns = inputs.shape[1]
    out = np.zeros((n, ns), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for i in range(n):
            o = op[i]
            m = _mask(w[i])
            if o == CONST:
                out[i] = k[i]
                continue
            if o == SYM:
                out[i] = inputs[a[i]] & m
                continue
            x = out[a[i]]
            if o == NOT:
                r = ~x & m
            elif o == NEG:
                r = (np.uint64(0) - x) & m
            elif o == EXTRACT:
                r = (x >> np.uint64(p[i])) & m
            elif o == ZEXT:
                r = x
            elif o == SEXT:
                sw = p[i]
                sign = (x >> np.uint64(sw - 1)) & np.uint64(1)
                hi = m & ~_mask(sw)
                r = np.where(sign == 1, x | hi, x)
            elif o == ITE:
                r = np.where(x != 0, out[b[i]], out[c[i]])
            else:
                y = out[b[i]]
                if o == ADD:
                    r = (x + y) & m
                elif o == SUB:
                    r = (x - y) & m
                elif o == MUL:
                    r = (x * y) & m
                elif o == AND:
                    r = x & y
                elif o == OR:
                    r = x | y
                elif o == XOR:
                    r = x ^ y
                elif o == SHL:
                    big = y >= np.uint64(w[i])
                    r = np.where(big, np.uint64(0), (x << np.minimum(y, np.uint64(63))) & m)
                elif o == LSHR:
                    big = y >= np.uint64(w[i])
                    r = np.where(big, np.uint64(0), x >> np.minimum(y, np.uint64(63)))
                elif o == CONCAT:
                    r = (x << np.uint64(p[i])) | y
                elif o == EQ:
                    r = (x == y).astype(np.uint64)
                elif o == ULT:
                    r = (x < y).astype(np.uint64)
                elif o == SLT:
                    sh = np.uint64(64 - p[i])
                    xs = (x << sh).view(np.int64)
                    ys = (y << sh).view(np.int64)
                    r = (xs < ys).astype(np.uint64)
                else:
                    raise ValueError(f"bad tape op {o}")
            out[i] = r
    return out


def levenshtein(s, t):
    """Character-level edit distance (insert, delete, substitute; unit costs)."""
    if len(s) < len(t):
        s, t = t, s
    if not t:
        return len(s)
    prev = list(range(len(t) + 1))
    for i, cs in enumerate(s, 1):
        cur = [i]
        for j, ct in enumerate(t, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (cs != ct)))
        prev = cur
    return prev[-1]
