"""Flatten expression DAGs into a linear tape for batched evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import Expr, postorder

CONST, SYM, NOT, NEG, EXTRACT, ZEXT, SEXT = range(7)
ADD, SUB, MUL, AND, OR, XOR, SHL, LSHR, CONCAT, EQ, ULT, SLT, ITE = range(7, 20)

_BINARY = {
    "add": ADD, "sub": SUB, "mul": MUL, "and": AND, "or": OR, "xor": XOR,
    "shl": SHL, "lshr": LSHR, "concat": CONCAT, "eq": EQ, "ult": ULT, "slt": SLT,
}
_UNARY = {"not": NOT, "neg": NEG, "extract": EXTRACT, "zext": ZEXT, "sext": SEXT}


def leaf_name(e: Expr) -> str:
    """Input name of a leaf: undefs of one width share a single input."""
    if e.op == "undef":
        return f"<undef:{e.width}>"
    return e.val  # type: ignore[return-value]


@dataclass
class Tape:
    op: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: np.ndarray
    w: np.ndarray
    k: np.ndarray
    inputs: list[tuple[str, int]]  # (leaf name, width), row order of the input matrix
    index: dict[Expr, int]

    def row(self, e: Expr) -> int:
        return self.index[e]


def compile_tape(roots: list[Expr]) -> Tape:
    nodes = postorder(roots)
    n = len(nodes)
    op = np.zeros(n, np.int32)
    a = np.zeros(n, np.int32)
    b = np.zeros(n, np.int32)
    c = np.zeros(n, np.int32)
    p = np.zeros(n, np.int32)
    w = np.zeros(n, np.int32)
    k = np.zeros(n, np.uint64)
    index: dict[Expr, int] = {}
    inputs: dict[str, int] = {}
    input_list: list[tuple[str, int]] = []
    for i, e in enumerate(nodes):
        index[e] = i
        w[i] = e.width
        if e.op == "const":
            op[i] = CONST
            k[i] = e.val
        elif e.op in ("sym", "undef"):
            name = leaf_name(e)
            if name not in inputs:
                inputs[name] = len(input_list)
                input_list.append((name, e.width))
            op[i] = SYM
            a[i] = inputs[name]
        elif e.op in _UNARY:
            op[i] = _UNARY[e.op]
            a[i] = index[e.args[0]]
            if e.op == "extract":
                p[i] = e.val[1]  # type: ignore[index]
            elif e.op == "sext":
                p[i] = e.args[0].width
        elif e.op == "ite":
            op[i] = ITE
            a[i], b[i], c[i] = (index[x] for x in e.args)
        else:
            op[i] = _BINARY[e.op]
            a[i] = index[e.args[0]]
            b[i] = index[e.args[1]]
            if e.op == "concat":
                p[i] = e.args[1].width
            elif e.op == "slt":
                p[i] = e.args[0].width
    return Tape(op, a, b, c, p, w, k, input_list, index)
