"""Fixed-width bit-vector expressions.

Nodes are hash-consed: building the same structure twice yields the same
object, so identity is structural equality and hashing is O(1).

Two construction layers exist:

* raw constructors (:func:`const`, :func:`symbol`, :func:`undef`,
  :func:`unary`, :func:`binary`, :func:`ite_raw`) build exactly the node asked
  for, with width checks only;
* canonical builders (:func:`add`, :func:`bvxor`, :func:`extract`, ...) apply
  the rewrite rules. Their results are fixed points of :func:`normalize_expr`.

The symbolic executor uses the canonical builders exclusively.
"""

from __future__ import annotations

import hashlib
import threading
import weakref
from typing import Iterable, Mapping

MAX_WIDTH = 64

UNARY_OPS = ("not", "neg", "extract", "zext", "sext")
BINARY_OPS = ("add", "sub", "mul", "and", "or", "xor", "shl", "lshr", "concat", "eq", "ult", "slt")
COMMUTATIVE = frozenset(("add", "mul", "and", "or", "xor", "eq"))


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    value &= mask(width)
    return value - (1 << width) if value >> (width - 1) else value


class Expr:
    """One interned expression node. Never construct directly."""

    __slots__ = ("op", "width", "args", "val", "digest", "__weakref__")

    op: str
    width: int
    args: tuple["Expr", ...]
    val: object
    digest: bytes

    def __repr__(self) -> str:
        return to_text(self)

    def __reduce__(self):
        # Re-intern on unpickle so identity semantics survive process pools.
        return (_node, (self.op, self.width, self.args, self.val))

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def value(self) -> int:
        if self.op != "const":
            raise TypeError(f"{self.op} node has no constant value")
        return self.val  # type: ignore[return-value]


_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


def _node(op: str, width: int, args: tuple = (), val: object = None) -> Expr:
    key = (op, width, val, args)
    e = _table.get(key)
    if e is not None:
        return e
    h = hashlib.blake2b(f"{op}|{width}|{val!r}|".encode(), digest_size=16)
    for a in args:
        h.update(a.digest)
    e = object.__new__(Expr)
    e.op, e.width, e.args, e.val, e.digest = op, width, args, val, h.digest()
    with _lock:
        return _table.setdefault(key, e)


# ---------------------------------------------------------------- raw layer


def const(value: int, width: int) -> Expr:
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"unsupported width {width}")
    return _node("const", width, (), value & mask(width))


def symbol(name: str, width: int) -> Expr:
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"unsupported width {width}")
    return _node("sym", width, (), name)


def undef(name: str, width: int) -> Expr:
    return _node("undef", width, (), name)


def _unary_width(op: str, child: Expr, param) -> tuple[int, object]:
    if op in ("not", "neg"):
        return child.width, None
    if op == "extract":
        hi, lo = param
        if not 0 <= lo <= hi < child.width:
            raise ValueError(f"bad extract({hi},{lo}) of width {child.width}")
        return hi - lo + 1, (hi, lo)
    if op in ("zext", "sext"):
        if not child.width <= param <= MAX_WIDTH:
            raise ValueError(f"bad {op} to {param} from {child.width}")
        return param, None
    raise ValueError(f"unknown unary op {op}")


def unary(op: str, child: Expr, param=None) -> Expr:
    """Raw unary node. ``param`` is ``(hi, lo)`` for extract, the target width for extends."""
    width, val = _unary_width(op, child, param)
    return _node(op, width, (child,), val)


def _binary_width(op: str, a: Expr, b: Expr) -> int:
    if op == "concat":
        if a.width + b.width > MAX_WIDTH:
            raise ValueError("concat too wide")
        return a.width + b.width
    if op not in BINARY_OPS:
        raise ValueError(f"unknown binary op {op}")
    if a.width != b.width:
        raise ValueError(f"{op}: width mismatch {a.width} vs {b.width}")
    return 1 if op in ("eq", "ult", "slt") else a.width


def binary(op: str, a: Expr, b: Expr) -> Expr:
    return _node(op, _binary_width(op, a, b), (a, b))


def ite_raw(cond: Expr, then: Expr, other: Expr) -> Expr:
    if cond.width != 1 or then.width != other.width:
        raise ValueError("ite: bad widths")
    return _node("ite", then.width, (cond, then, other))


# ------------------------------------------------------------ node ordering

_RANK = {"sym": 0, "undef": 1, "const": 3}


def order_key(e: Expr) -> tuple[int, bytes]:
    """Total order used for commutative operands: symbols first, constants last."""
    return (_RANK.get(e.op, 2), e.digest)


# ------------------------------------------------------------ linear forms


def _linear(e: Expr) -> tuple[dict[Expr, int], int]:
    """Decompose ``e`` (canonical) into ``sum(coef * atom) + k`` modulo 2**width."""
    m = mask(e.width)
    op = e.op
    if op == "const":
        return {}, e.val  # type: ignore[return-value]
    if op == "add":
        t1, k1 = _linear(e.args[0])
        t2, k2 = _linear(e.args[1])
        for t, c in t2.items():
            t1[t] = (t1.get(t, 0) + c) & m
        return t1, (k1 + k2) & m
    if op == "sub":
        t1, k1 = _linear(e.args[0])
        t2, k2 = _linear(e.args[1])
        for t, c in t2.items():
            t1[t] = (t1.get(t, 0) - c) & m
        return t1, (k1 - k2) & m
    if op == "neg":
        t, k = _linear(e.args[0])
        return {a: (-c) & m for a, c in t.items()}, (-k) & m
    if op == "mul" and (e.args[0].is_const or e.args[1].is_const):
        x, c = (e.args[1], e.args[0].val) if e.args[0].is_const else (e.args[0], e.args[1].val)
        t, k = _linear(x)
        return {a: (v * c) & m for a, v in t.items()}, (k * c) & m  # type: ignore[operator]
    if op == "shl" and e.args[1].is_const and e.args[1].val < e.width:
        c = 1 << e.args[1].val  # type: ignore[operator]
        t, k = _linear(e.args[0])
        return {a: (v * c) & m for a, v in t.items()}, (k * c) & m
    return {e: 1}, 0


def _build_linear(width: int, terms: Mapping[Expr, int], k: int) -> Expr:
    m = mask(width)
    items = []
    for atom in sorted((a for a, c in terms.items() if c & m), key=order_key):
        c = terms[atom] & m
        items.append(atom if c == 1 else _node("mul", width, (atom, const(c, width))))
    k &= m
    if k or not items:
        items.append(const(k, width))
    out = items[-1]
    for item in reversed(items[:-1]):
        out = _node("add", width, (item, out))
    return out


def linear_parts(e: Expr) -> tuple[Expr | None, int]:
    """Split a canonical expression into (non-constant part, constant offset)."""
    terms, k = _linear(e)
    terms = {a: c for a, c in terms.items() if c}
    if not terms:
        return None, k
    return _build_linear(e.width, terms, 0), k


# --------------------------------------------------------- bitwise chains


def _chain(e: Expr, op: str) -> list[Expr]:
    out = []
    while e.op == op:
        out.append(e.args[0])
        e = e.args[1]
    out.append(e)
    return out


def _build_chain(op: str, width: int, items: list[Expr]) -> Expr:
    out = items[-1]
    for item in reversed(items[:-1]):
        w = item.width + out.width if op == "concat" else width
        out = _node(op, w, (item, out))
    return out


def _canon_xor(width: int, parts: Iterable[Expr]) -> Expr:
    m = mask(width)
    parity: dict[Expr, int] = {}
    k = 0
    stack = list(parts)
    while stack:
        p = stack.pop()
        if p.op == "xor":
            stack.extend(p.args)
        elif p.op == "not":
            stack.append(p.args[0])
            k ^= m
        elif p.op == "const":
            k ^= p.val  # type: ignore[operator]
        else:
            parity[p] = parity.get(p, 0) ^ 1
    atoms = sorted((a for a, bit in parity.items() if bit), key=order_key)
    if not atoms:
        return const(k, width)
    body = _build_chain("xor", width, atoms)
    if k == m:
        return _node("not", width, (body,))
    if k:
        return _build_chain("xor", width, atoms + [const(k, width)])
    return body


def _canon_andor(op: str, width: int, parts: Iterable[Expr]) -> Expr:
    m = mask(width)
    identity, annihilator = (m, 0) if op == "and" else (0, m)
    k = identity
    atoms: set[Expr] = set()
    stack = list(parts)
    while stack:
        p = stack.pop()
        if p.op == op:
            stack.extend(p.args)
        elif p.op == "const":
            k = (k & p.val) if op == "and" else (k | p.val)  # type: ignore[operator]
        else:
            atoms.add(p)
    if k == annihilator:
        return const(k, width)
    for a in atoms:
        if a.op == "not" and a.args[0] in atoms:
            return const(annihilator, width)
    items = sorted(atoms, key=order_key)
    if k != identity or not items:
        items.append(const(k, width))
    return _build_chain(op, width, items)


# --------------------------------------------------------- canonical rules


def _canon(op: str, width: int, args: tuple[Expr, ...], val: object) -> Expr:
    """Canonical node for ``op`` applied to canonical ``args``."""
    if op in ("const", "sym", "undef"):
        return _node(op, width, (), val)
    rule = _RULES.get(op)
    if rule is None:
        raise ValueError(f"unknown op {op}")
    return rule(width, args, val)


def _r_add(width, args, val):
    t, k = _linear(_node("add", width, args))
    return _build_linear(width, t, k)


def _r_sub(width, args, val):
    t, k = _linear(_node("sub", width, args))
    return _build_linear(width, t, k)


def _r_neg(width, args, val):
    t, k = _linear(_node("neg", width, args))
    return _build_linear(width, t, k)


def _r_mul(width, args, val):
    a, b = args
    if a.is_const or b.is_const:
        t, k = _linear(_node("mul", width, args))
        return _build_linear(width, t, k)
    a, b = sorted(args, key=order_key)
    return _node("mul", width, (a, b))


def _r_xor(width, args, val):
    return _canon_xor(width, args)


def _r_not(width, args, val):
    return _canon_xor(width, (args[0], const(mask(width), width)))


def _r_and(width, args, val):
    return _canon_andor("and", width, args)


def _r_or(width, args, val):
    return _canon_andor("or", width, args)


def _r_shift(op):
    def rule(width, args, val):
        x, n = args
        if n.is_const:
            if n.val >= width:
                return const(0, width)
            if n.val == 0:
                return x
            if op == "shl":
                t, k = _linear(_node("shl", width, args))
                return _build_linear(width, t, k)
            if x.is_const:
                return const(x.val >> n.val, width)
        elif x.is_const and x.val == 0:
            return x
        return _node(op, width, args)

    return rule


def _parts(e: Expr) -> list[tuple[Expr, int, int]]:
    """Concat chain as (base, hi, lo) slices, most significant first."""
    out = []
    for p in _chain(e, "concat"):
        if p.op == "extract":
            hi, lo = p.val  # type: ignore[misc]
            out.append((p.args[0], hi, lo))
        else:
            out.append((p, p.width - 1, 0))
    return out


def _slice_expr(base: Expr, hi: int, lo: int) -> Expr:
    if base.is_const:
        return const(base.val >> lo, hi - lo + 1)  # type: ignore[operator]
    if lo == 0 and hi == base.width - 1:
        return base
    return _node("extract", hi - lo + 1, (base,), (hi, lo))


def _r_concat(width, args, val):
    parts = _parts(args[0]) + _parts(args[1])
    merged: list[tuple[Expr, int, int]] = []
    for base, hi, lo in parts:
        if merged:
            pb, ph, pl = merged[-1]
            if pb.is_const and base.is_const:
                a = _slice_expr(pb, ph, pl)
                b = _slice_expr(base, hi, lo)
                c = const((a.val << b.width) | b.val, a.width + b.width)  # type: ignore[operator]
                merged[-1] = (c, c.width - 1, 0)
                continue
            if pb is base and pl == hi + 1:
                merged[-1] = (base, ph, lo)
                continue
        if base.is_const:
            c = _slice_expr(base, hi, lo)
            base, hi, lo = c, c.width - 1, 0
        merged.append((base, hi, lo))
    merged = _absorb_known_bits(merged)
    items = [_slice_expr(b, h, l) for b, h, l in merged]
    return _build_chain("concat", width, items)


def _absorb_known_bits(parts: list[tuple[Expr, int, int]]) -> list[tuple[Expr, int, int]]:
    """Grow a slice over a neighbouring constant that equals the base's own bits there."""
    out = list(parts)
    i = 0
    while i < len(out) - 1:
        (b1, h1, l1), (b2, h2, l2) = out[i], out[i + 1]
        if b2.is_const and not b1.is_const and l1 >= b2.width:
            if extract(b1, l1 - 1, l1 - b2.width) is b2:
                out[i:i + 2] = [(b1, h1, l1 - b2.width)]
                continue
        if b1.is_const and not b2.is_const and h2 + b1.width < b2.width:
            if extract(b2, h2 + b1.width, h2 + 1) is b1:
                out[i:i + 2] = [(b2, h2 + b1.width, l2)]
                i = max(i - 1, 0)
                continue
        i += 1
    return out


def _r_extract(width, args, val):
    hi, lo = val
    x = args[0]
    if lo == 0 and hi == x.width - 1:
        return x
    op = x.op
    if op == "const":
        return const(x.val >> lo, width)  # type: ignore[operator]
    if op == "extract":
        _, l2 = x.val  # type: ignore[misc]
        return extract(x.args[0], hi + l2, lo + l2)
    if op == "concat":
        a, b = x.args
        bw = b.width
        if hi < bw:
            return extract(b, hi, lo)
        if lo >= bw:
            return extract(a, hi - bw, lo - bw)
        return concat(extract(a, hi - bw, 0), extract(b, bw - 1, lo))
    if op in ("and", "or", "xor"):
        return _canon(op, width, (extract(x.args[0], hi, lo), extract(x.args[1], hi, lo)), None)
    if op == "not":
        return bvnot(extract(x.args[0], hi, lo))
    if op == "ite":
        c, t, e = x.args
        return ite(c, extract(t, hi, lo), extract(e, hi, lo))
    if lo == 0 and op in ("add", "sub", "mul", "neg"):
        if op == "neg":
            return neg(extract(x.args[0], hi, 0))
        a, b = (extract(y, hi, 0) for y in x.args)
        return _canon(op, width, (a, b), None)
    if op == "lshr" and x.args[1].is_const:
        k = x.args[1].val
        top = x.width - 1 - k  # type: ignore[operator]
        if lo + k > x.width - 1:  # type: ignore[operator]
            return const(0, width)
        if hi <= top:
            return extract(x.args[0], hi + k, lo + k)  # type: ignore[operator]
        return concat(const(0, hi - top), extract(x.args[0], x.width - 1, lo + k))  # type: ignore[operator]
    if op == "sext" and hi < x.args[0].width:
        return extract(x.args[0], hi, lo)
    return _node("extract", width, (x,), (hi, lo))


def _r_zext(width, args, val):
    x = args[0]
    if width == x.width:
        return x
    return concat(const(0, width - x.width), x)


def _r_sext(width, args, val):
    x = args[0]
    if width == x.width:
        return x
    if x.is_const:
        return const(to_signed(x.val, x.width), width)  # type: ignore[arg-type]
    if x.op == "sext":
        return sext(x.args[0], width)
    return _node("sext", width, (x,))


def _r_eq(width, args, val):
    a, b = args
    if a is b:
        return TRUE
    if a.is_const and b.is_const:
        return TRUE if a.val == b.val else FALSE
    w = a.width
    if w == 1:
        if b.is_const:
            a, b = b, a
        if a.is_const:
            return b if a.val else bvnot(b)
        return bvnot(bvxor(a, b))
    m = mask(w)
    ta, ka = _linear(a)
    tb, kb = _linear(b)
    for t, c in tb.items():
        ta[t] = (ta.get(t, 0) - c) & m
    terms = {t: c for t, c in ta.items() if c & m}
    rhs = (kb - ka) & m
    if not terms:
        return TRUE if rhs == 0 else FALSE
    first = min(terms, key=order_key)
    if terms[first] > (m >> 1) + 1:
        terms = {t: (-c) & m for t, c in terms.items()}
        rhs = (-rhs) & m
    lhs = _build_linear(w, terms, 0)
    return _node("eq", 1, (lhs, const(rhs, w)))


def _r_ult(width, args, val):
    a, b = args
    if a is b:
        return FALSE
    if a.is_const and b.is_const:
        return TRUE if a.val < b.val else FALSE  # type: ignore[operator]
    if b.is_const and b.val == 0:
        return FALSE
    if a.is_const and a.val == mask(a.width):
        return FALSE
    return _node("ult", 1, args)


def _r_slt(width, args, val):
    a, b = args
    if a is b:
        return FALSE
    if a.is_const and b.is_const:
        return TRUE if to_signed(a.val, a.width) < to_signed(b.val, b.width) else FALSE  # type: ignore[arg-type]
    return _node("slt", 1, args)


def _r_ite(width, args, val):
    c, t, e = args
    if c.is_const:
        return t if c.val else e
    if t is e:
        return t
    if c.op == "not":
        return ite(c.args[0], e, t)
    if width == 1 and t.is_const and e.is_const:
        return c if t.val else bvnot(c)
    return _node("ite", width, args)


_RULES = {
    "add": _r_add,
    "sub": _r_sub,
    "neg": _r_neg,
    "mul": _r_mul,
    "xor": _r_xor,
    "not": _r_not,
    "and": _r_and,
    "or": _r_or,
    "shl": _r_shift("shl"),
    "lshr": _r_shift("lshr"),
    "concat": _r_concat,
    "extract": _r_extract,
    "zext": _r_zext,
    "sext": _r_sext,
    "eq": _r_eq,
    "ult": _r_ult,
    "slt": _r_slt,
    "ite": _r_ite,
}

TRUE = const(1, 1)
FALSE = const(0, 1)


# ------------------------------------------------------- canonical builders


def add(a: Expr, b: Expr) -> Expr:
    return _canon("add", _binary_width("add", a, b), (a, b), None)


def sub(a: Expr, b: Expr) -> Expr:
    return _canon("sub", _binary_width("sub", a, b), (a, b), None)


def mul(a: Expr, b: Expr) -> Expr:
    return _canon("mul", _binary_width("mul", a, b), (a, b), None)


def bvand(a: Expr, b: Expr) -> Expr:
    return _canon("and", _binary_width("and", a, b), (a, b), None)


def bvor(a: Expr, b: Expr) -> Expr:
    return _canon("or", _binary_width("or", a, b), (a, b), None)


def bvxor(a: Expr, b: Expr) -> Expr:
    return _canon("xor", _binary_width("xor", a, b), (a, b), None)


def shl(a: Expr, b: Expr) -> Expr:
    return _canon("shl", _binary_width("shl", a, b), (a, b), None)


def lshr(a: Expr, b: Expr) -> Expr:
    return _canon("lshr", _binary_width("lshr", a, b), (a, b), None)


def concat(a: Expr, b: Expr) -> Expr:
    return _canon("concat", _binary_width("concat", a, b), (a, b), None)


def eq(a: Expr, b: Expr) -> Expr:
    return _canon("eq", _binary_width("eq", a, b), (a, b), None)


def ult(a: Expr, b: Expr) -> Expr:
    return _canon("ult", _binary_width("ult", a, b), (a, b), None)


def slt(a: Expr, b: Expr) -> Expr:
    return _canon("slt", _binary_width("slt", a, b), (a, b), None)


def bvnot(a: Expr) -> Expr:
    return _canon("not", a.width, (a,), None)


def neg(a: Expr) -> Expr:
    return _canon("neg", a.width, (a,), None)


def extract(a: Expr, hi: int, lo: int) -> Expr:
    width, v = _unary_width("extract", a, (hi, lo))
    return _canon("extract", width, (a,), v)


def zext(a: Expr, width: int) -> Expr:
    _unary_width("zext", a, width)
    return _canon("zext", width, (a,), None)


def sext(a: Expr, width: int) -> Expr:
    _unary_width("sext", a, width)
    return _canon("sext", width, (a,), None)


def ite(cond: Expr, then: Expr, other: Expr) -> Expr:
    if cond.width != 1 or then.width != other.width:
        raise ValueError("ite: bad widths")
    return _canon("ite", then.width, (cond, then, other), None)


def msb(a: Expr) -> Expr:
    return extract(a, a.width - 1, a.width - 1)


# ------------------------------------------------------------- traversals


def postorder(roots: Iterable[Expr]) -> list[Expr]:
    """Every distinct node reachable from ``roots``, children before parents."""
    seen: set[int] = set()
    order: list[Expr] = []
    for root in roots:
        if id(root) in seen:
            continue
        stack: list[tuple[Expr, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in reversed(node.args):
                if id(child) not in seen:
                    stack.append((child, False))
    return order


def rebuild(e: Expr, leaf_map: Mapping[Expr, Expr] | None = None) -> Expr:
    """Bottom-up canonical reconstruction, replacing nodes found in ``leaf_map``."""
    leaf_map = leaf_map or {}
    done: dict[Expr, Expr] = {}
    for node in postorder([e]):
        if node in leaf_map:
            done[node] = leaf_map[node]
            continue
        args = tuple(done[a] for a in node.args)
        done[node] = _canon(node.op, node.width, args, node.val)
    return done[e]


def normalize_expr(e: Expr) -> Expr:
    """Canonical form of ``e``; idempotent and value-preserving."""
    return rebuild(e)


def substitute(e: Expr, mapping: Mapping[Expr, Expr]) -> Expr:
    """Replace any sub-expression found in ``mapping`` and re-canonicalize."""
    if not mapping:
        return e
    return rebuild(e, mapping)


def rename(e: Expr, names: Mapping[str, str]) -> Expr:
    """Rename symbols (and undefs) by id."""
    leaf = {}
    for node in postorder([e]):
        if node.op in ("sym", "undef") and node.val in names:
            leaf[node] = _node(node.op, node.width, (), names[node.val])  # type: ignore[index]
    return substitute(e, leaf)


_sym_cache: "weakref.WeakKeyDictionary[Expr, frozenset[Expr]]" = weakref.WeakKeyDictionary()


def symbols(e: Expr) -> frozenset[Expr]:
    """Symbol and undef leaves of ``e``."""
    hit = _sym_cache.get(e)
    if hit is not None:
        return hit
    out = frozenset(n for n in postorder([e]) if n.op in ("sym", "undef"))
    _sym_cache[e] = out
    return out


def constants(e: Expr) -> set[int]:
    return {n.val for n in postorder([e]) if n.op == "const"}  # type: ignore[misc]


def evaluate(e: Expr, env: Mapping[str, int], undef_value: Mapping[int, int] | None = None) -> int:
    """Concrete value of ``e`` with symbols bound by id.

    Undef nodes take ``undef_value[width]`` (default 0); every undef of a given
    width shares that value.
    """
    undef_value = undef_value or {}
    vals: dict[int, int] = {}
    for n in postorder([e]):
        w = n.width
        m = mask(w)
        op = n.op
        a = [vals[id(c)] for c in n.args]
        if op == "const":
            r = n.val
        elif op == "sym":
            r = env[n.val] & m  # type: ignore[index]
        elif op == "undef":
            r = undef_value.get(w, 0) & m
        elif op == "not":
            r = ~a[0] & m
        elif op == "neg":
            r = -a[0] & m
        elif op == "extract":
            r = (a[0] >> n.val[1]) & m  # type: ignore[index]
        elif op == "zext":
            r = a[0]
        elif op == "sext":
            r = to_signed(a[0], n.args[0].width) & m
        elif op == "add":
            r = (a[0] + a[1]) & m
        elif op == "sub":
            r = (a[0] - a[1]) & m
        elif op == "mul":
            r = (a[0] * a[1]) & m
        elif op == "and":
            r = a[0] & a[1]
        elif op == "or":
            r = a[0] | a[1]
        elif op == "xor":
            r = a[0] ^ a[1]
        elif op == "shl":
            r = (a[0] << a[1]) & m if a[1] < w else 0
        elif op == "lshr":
            r = a[0] >> a[1] if a[1] < w else 0
        elif op == "concat":
            r = (a[0] << n.args[1].width) | a[1]
        elif op == "eq":
            r = int(a[0] == a[1])
        elif op == "ult":
            r = int(a[0] < a[1])
        elif op == "slt":
            cw = n.args[0].width
            r = int(to_signed(a[0], cw) < to_signed(a[1], cw))
        elif op == "ite":
            r = a[1] if a[0] else a[2]
        else:
            raise ValueError(f"unknown op {op}")
        vals[id(n)] = r  # type: ignore[assignment]
    return vals[id(e)]


def to_text(e: Expr, limit: int = 400) -> str:
    """Readable s-expression; deep DAGs are elided past ``limit`` characters."""
    out: list[str] = []
    budget = [limit]

    def emit(s: str) -> bool:
        out.append(s)
        budget[0] -= len(s)
        return budget[0] > 0

    def walk(n: Expr) -> bool:
        if n.op == "const":
            return emit(f"{n.val:#x}:{n.width}")
        if n.op == "sym":
            return emit(str(n.val))
        if n.op == "undef":
            return emit(f"undef({n.val}):{n.width}")
        head = n.op
        if n.op == "extract":
            head = f"extract[{n.val[0]}:{n.val[1]}]"  # type: ignore[index]
        elif n.op in ("zext", "sext"):
            head = f"{n.op}{n.width}"
        if not emit(f"({head}"):
            return False
        for c in n.args:
            if not emit(" ") or not walk(c):
                return False
        return emit(")")

    if not walk(e):
        out.append("...")
    return "".join(out)
