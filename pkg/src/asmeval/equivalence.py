"""Semantic equivalence of execution outcomes.

Expressions are compared structurally after canonicalization and, failing
that, by evaluating both on a batch of seeded pseudo-random assignments. The
assignments are biased toward collisions (tiny values, constants taken from
the expressions and their neighbours) so that equality predicates are
actually exercised.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import expr as E
from .expr import Expr, normalize_expr
from .kernels import eval_tape
from .symexec import (
    REACHED_EXIT, ControlTransferEvent, ExecOutcome, LeafState, SyscallEvent,
    initial_memory_byte, stack_symbol,
)
from .tape import compile_tape

__all__ = [
    "EquivalenceConfig", "LeafSignature", "normalize_expr", "exprs_equal", "signature",
    "leaves_match", "outcomes_equivalent",
]

_SPECIALS = (0, 1, 2, 0x7F, 0x80, 0xFF, 0x7FFF, 0x8000, 0xFFFF,
             0x7FFFFFFF, 0x80000000, 0xFFFFFFFF)
_FOCUS = (0, 1, 2, -1, -2, 0x7FFFFFFF, 0x80000000)


@dataclass(frozen=True)
class EquivalenceConfig:
    concretization_samples: int = 64
    rng_seed: int = 0
    treat_undef_as_wild: bool = False
    # second round, only run when the first finds no disagreement; 0 disables it
    focus_samples: int = 256

    def __post_init__(self):
        if self.concretization_samples < 1:
            raise ValueError("concretization_samples must be >= 1")
        if self.focus_samples < 0:
            raise ValueError("focus_samples must be >= 0")
        if not 0 <= self.rng_seed < 1 << 64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class LeafSignature:
    """Comparable projection of a leaf that reached the exit."""

    regs: tuple[tuple[str, Expr], ...]
    flags: tuple[tuple[str, Expr], ...]
    esp_delta: int | None
    stack: dict[int, Expr]
    memory: dict[tuple[Expr | None, int], Expr]
    constraints: tuple[Expr, ...]
    events: tuple

    def key(self) -> tuple:
        """Identity key: equal keys mean structurally identical signatures."""
        return (
            self.regs, self.flags, self.esp_delta,
            tuple(sorted((k, v.digest) for k, v in self.stack.items())),
            tuple(sorted((b.digest if b is not None else b"", o, v.digest)
                         for (b, o), v in self.memory.items())),
            frozenset(self.constraints), self.events,
        )


def signature(leaf: LeafState) -> LeafSignature:
    if leaf.termination != REACHED_EXIT:
        raise ValueError(f"cannot sign a {leaf.termination} leaf")
    delta = leaf.esp_delta
    stack = {
        off: normalize_expr(v) for off, v in leaf.stack.items()
        if delta is None or off >= delta
    }
    constraints = []
    for c in leaf.path_constraints:
        c = normalize_expr(c)
        if c is not E.TRUE and c not in constraints:
            constraints.append(c)
    return LeafSignature(
        tuple(sorted((k, normalize_expr(v)) for k, v in leaf.regs.items())),
        tuple(sorted((k, normalize_expr(v)) for k, v in leaf.flags.items())),
        delta,
        stack,
        {k: normalize_expr(v) for k, v in leaf.memory.items()},
        tuple(constraints),
        tuple(_normalize_event(ev) for ev in leaf.events),
    )


def _normalize_event(ev):
    if isinstance(ev, SyscallEvent):
        return SyscallEvent(ev.vector, *(normalize_expr(x) for x in (ev.eax, ev.ebx, ev.ecx, ev.edx)))
    if isinstance(ev, ControlTransferEvent) and isinstance(ev.target, Expr):
        return ControlTransferEvent(normalize_expr(ev.target))
    return ev


# ------------------------------------------------------------- sampling


def _stable_hash(name: str) -> int:
    return int.from_bytes(hashlib.blake2b(name.encode(), digest_size=8).digest(), "little")


class _Sampler:
    """Per-input value columns, reproducible from (seed, input name, pool).

    The default mix draws tiny values, pooled constants and uniform words. The
    focused mix draws almost only from a small pool around the constants that
    the expressions compare against, which is where two otherwise close
    expressions tend to part ways (``x*y == 0x1f`` versus ``x*y == 0x20``).
    """

    def __init__(self, cfg: EquivalenceConfig, exprs: Iterable[Expr], focus: bool = False):
        self.focus = focus
        self.n = cfg.focus_samples if focus else cfg.concretization_samples
        self.seed = cfg.rng_seed
        consts: set[int] = set(_FOCUS if focus else _SPECIALS)
        for e in exprs:
            if focus:
                found = _compared_constants(e)
            else:
                found = E.constants(e)
            for c in found:
                consts.update((c, c + 1, c - 1) if focus else (c, c + 1, c - 1, -c))
        self.pool = np.array(sorted(c & 0xFFFFFFFFFFFFFFFF for c in consts), dtype=np.uint64)
        self._cache: dict[tuple[str, int], np.ndarray] = {}

    def column(self, name: str, width: int) -> np.ndarray:
        hit = self._cache.get((name, width))
        if hit is not None:
            return hit
        rng = np.random.default_rng([self.seed, _stable_hash(name), width, int(self.focus)])
        n = self.n
        uniform = rng.integers(0, 1 << 64, size=n, dtype=np.uint64, endpoint=False)
        pooled = self.pool[rng.integers(0, len(self.pool), size=n)]
        if self.focus:
            col = np.where(rng.integers(0, 8, size=n) == 0, uniform, pooled)
        else:
            small = rng.integers(0, 4, size=n).astype(np.uint64)
            choice = rng.integers(0, 4, size=n)
            j = np.arange(n)
            mode = np.where(j % 4 == 0, 2, np.where(j % 4 == 1, 1, np.where(choice < 2, 0, choice - 1)))
            col = np.where(mode == 0, uniform, np.where(mode == 1, pooled, small))
        if width < 64:
            col = col & np.uint64((1 << width) - 1)
        col = np.ascontiguousarray(col, dtype=np.uint64)
        self._cache[(name, width)] = col
        return col


def _compared_constants(e: Expr) -> set[int]:
    """Input values that make some comparison in ``e`` hit its constant exactly."""
    out: set[int] = set()
    for n in E.postorder([e]):
        if n.op in ("eq", "ult", "slt"):
            x, y = n.args
            if x.is_const:
                x, y = y, x
            if y.is_const:
                for d in (-1, 0, 1):
                    _targets(x, y.val + d, out)  # type: ignore[operator]
    return out


def _targets(x: Expr, c: int, out: set[int]) -> None:
    c &= E.mask(x.width)
    if x.op == "extract":
        _targets(x.args[0], c << x.val[1], out)  # type: ignore[index]
    elif x.op == "concat":
        hi, lo = x.args
        _targets(hi, c >> lo.width, out)
        _targets(lo, c, out)
    elif x.op in ("zext", "sext"):
        _targets(x.args[0], c, out)
    elif x.op in ("xor", "add") and x.args[1].is_const:
        k = x.args[1].val
        _targets(x.args[0], c ^ k if x.op == "xor" else c - k, out)  # type: ignore[operator]
    elif x.op == "not":
        _targets(x.args[0], ~c, out)
    elif x.op == "neg":
        _targets(x.args[0], -c, out)
    elif not x.is_const:
        out.add(c)


def _evaluate(roots: list[Expr], sampler: _Sampler) -> dict[Expr, np.ndarray]:
    tape = compile_tape(roots)
    inputs = np.zeros((len(tape.inputs), sampler.n), dtype=np.uint64)
    for i, (name, width) in enumerate(tape.inputs):
        inputs[i] = sampler.column(name, width)
    out = eval_tape(tape.op, tape.a, tape.b, tape.c, tape.p, tape.w, tape.k, inputs)
    return {r: out[tape.index[r]] for r in roots}


# ------------------------------------------------------------ comparisons


def _agree(pairs: list[tuple[Expr, Expr]], residual: list[Expr], cfg: EquivalenceConfig) -> bool | None:
    """Do all pairs evaluate alike on every sample satisfying ``residual``?

    ``None`` means no sample satisfied the residual constraints.
    """
    roots = [e for pair in pairs for e in pair] + residual
    reached = False
    for focus in (False, True):
        if focus and cfg.focus_samples == 0:
            break
        sampler = _Sampler(cfg, roots, focus)
        vals = _evaluate(roots, sampler)
        keep = np.ones(sampler.n, dtype=bool)
        for c in residual:
            keep &= vals[c] != 0
        if not keep.any():
            continue
        reached = True
        if not all(np.array_equal(vals[x][keep], vals[y][keep]) for x, y in pairs):
            return False
    return True if reached else None


def _undef_verdict(a: Expr, b: Expr, cfg: EquivalenceConfig) -> bool | None:
    ua, ub = a.op == "undef", b.op == "undef"
    if cfg.treat_undef_as_wild and (ua or ub):
        return True
    if ua or ub:
        return ua and ub and a.width == b.width
    return None


def exprs_equal(a: Expr, b: Expr, cfg: EquivalenceConfig) -> bool:
    if a.width != b.width:
        return False
    verdict = _undef_verdict(a, b, cfg)
    if verdict is not None:
        return verdict
    a, b = normalize_expr(a), normalize_expr(b)
    if a is b:
        return True
    if a.is_const and b.is_const:
        return False
    return bool(_agree([(a, b)], [], cfg))


class _Facts:
    """Substitutions implied by a path condition.

    Linear equalities ``L == k`` are solved first, each for one atom with an
    odd (hence invertible) coefficient. Whatever remains is then fixed as a
    bare predicate: ``p`` becomes TRUE and ``not p`` makes ``p`` FALSE.
    """

    def __init__(self, constraints: Iterable[Expr]):
        self.eqs: dict[Expr, Expr] = {}
        rest = [c for c in constraints if not self._solve(c)]
        self.preds: dict[Expr, Expr] = {}
        for c in rest:
            c = E.substitute(c, self.eqs)
            if c.is_const:
                continue
            key, v = (c.args[0], E.FALSE) if c.op == "not" else (c, E.TRUE)
            self.preds.setdefault(key, v)

    def __bool__(self) -> bool:
        return bool(self.eqs or self.preds)

    def apply(self, e: Expr) -> Expr:
        return E.substitute(E.substitute(e, self.eqs), self.preds)

    def _solve(self, c: Expr) -> bool:
        c = E.substitute(c, self.eqs)
        if c.op != "eq" or not c.args[1].is_const:
            return False
        lhs, k = c.args
        w = lhs.width
        terms, k0 = E._linear(lhs)
        cands = [t for t, coef in terms.items() if coef & 1]
        if not cands:
            return False
        cands.sort(key=lambda t: (t.op != "sym", E.order_key(t)))
        atom = cands[0]
        inv = pow(terms.pop(atom), -1, 1 << w)
        # atom = inv * (k - k0 - rest)
        rest = {t: (-v * inv) for t, v in terms.items()}
        value = E._build_linear(w, rest, (k.val - k0) * inv)
        if atom in E.symbols(value):
            return False
        self.eqs = {key: E.substitute(v, {atom: value}) for key, v in self.eqs.items()}
        self.eqs[atom] = value
        return True


def _constraints_equal(a: tuple[Expr, ...], b: tuple[Expr, ...], cfg: EquivalenceConfig) -> bool:
    sa, sb = set(a), set(b)
    rest_a = [x for x in a if x not in sb]
    rest_b = [x for x in b if x not in sa]
    if not rest_a and not rest_b:
        return True
    if not rest_a or not rest_b:
        return False
    return (all(any(exprs_equal(x, y, cfg) for y in b) for x in rest_a)
            and all(any(exprs_equal(y, x, cfg) for x in a) for y in rest_b))


def _state_pairs(a: LeafSignature, b: LeafSignature) -> list[tuple[Expr, Expr]]:
    pairs = [(x, y) for (_, x), (_, y) in zip(a.regs, b.regs)]
    pairs += [(x, y) for (_, x), (_, y) in zip(a.flags, b.flags)]
    for off in sorted(a.stack.keys() | b.stack.keys()):
        dflt = stack_symbol(off)
        pairs.append((a.stack.get(off, dflt), b.stack.get(off, dflt)))
    for key in a.memory.keys() | b.memory.keys():
        dflt = initial_memory_byte(*key)
        pairs.append((a.memory.get(key, dflt), b.memory.get(key, dflt)))
    return pairs


def _event_pairs(a: LeafSignature, b: LeafSignature) -> list[tuple[Expr, Expr]] | None:
    if len(a.events) != len(b.events):
        return None
    pairs = []
    for x, y in zip(a.events, b.events):
        if type(x) is not type(y):
            return None
        if isinstance(x, SyscallEvent):
            if x.vector != y.vector:
                return None
            pairs += [(x.eax, y.eax), (x.ebx, y.ebx), (x.ecx, y.ecx), (x.edx, y.edx)]
        else:
            tx, ty = x.target, y.target
            if isinstance(tx, str) or isinstance(ty, str):
                if tx != ty:
                    return None
            else:
                pairs.append((tx, ty))
    return pairs


def leaves_match(a: LeafSignature, b: LeafSignature, cfg: EquivalenceConfig) -> bool:
    if a.esp_delta != b.esp_delta:
        return False
    if [k for k, _ in a.regs] != [k for k, _ in b.regs] or [k for k, _ in a.flags] != [k for k, _ in b.flags]:
        return False
    ev = _event_pairs(a, b)
    if ev is None:
        return False
    if not _constraints_equal(a.constraints, b.constraints, cfg):
        return False

    cons = sorted(set(a.constraints) | set(b.constraints), key=E.order_key)
    facts = _Facts(cons)
    residual = []
    for c in cons:
        c = facts.apply(c)
        if c is E.FALSE:
            return True  # infeasible path on both sides
        if c is not E.TRUE:
            residual.append(c)

    todo: list[tuple[Expr, Expr]] = []
    for x, y in _state_pairs(a, b) + ev:
        if x is y:
            continue
        verdict = _undef_verdict(x, y, cfg)
        if verdict is False:
            return False
        if verdict is True:
            continue
        if facts:
            x, y = facts.apply(x), facts.apply(y)
            if x is y:
                continue
        if x.is_const and y.is_const:
            return False
        todo.append((x, y))
    if not todo:
        return True

    verdict = _agree(todo, residual, cfg)
    if verdict is not None:
        return verdict
    # No sample reaches this path; compare the unconditioned expressions instead.
    plain = [(x, y) for x, y in _state_pairs(a, b) + ev if x is not y]
    return bool(_agree(plain, [], cfg))


def _merge(sigs: list[LeafSignature], cfg: EquivalenceConfig) -> list[LeafSignature]:
    seen: dict[tuple, LeafSignature] = {}
    for s in sigs:
        seen.setdefault(s.key(), s)
    reps: list[LeafSignature] = []
    for s in seen.values():
        if not any(leaves_match(r, s, cfg) for r in reps):
            reps.append(s)
    return reps


def outcomes_equivalent(p: ExecOutcome, g: ExecOutcome, cfg: EquivalenceConfig | None = None) -> bool:
    cfg = cfg or EquivalenceConfig()
    if p.exhausted or g.exhausted:
        return False
    sp = _merge([signature(leaf) for leaf in p.leaves], cfg)
    sg = _merge([signature(leaf) for leaf in g.leaves], cfg)
    if len(sp) != len(sg):
        return False
    n = len(sp)
    cost = np.ones((n, n))
    for i, x in enumerate(sp):
        for j, y in enumerate(sg):
            if leaves_match(x, y, cfg):
                cost[i, j] = 0.0
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].sum() == 0)
