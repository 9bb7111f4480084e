import pickle
import random

from hypothesis import given, settings, strategies as st

from asmeval import expr as E

X = E.symbol("EAX", 32)
Y = E.symbol("EBX", 32)
C = E.symbol("ECX", 32)


def test_hash_consing():
    assert E.add(X, E.const(1, 32)) is E.add(E.const(1, 32), X)
    assert E.symbol("EAX", 32) is X


def test_annihilators_and_identities():
    assert E.bvxor(X, X) is E.const(0, 32)
    assert E.bvand(X, E.const(0, 32)) is E.const(0, 32)
    assert E.bvor(X, E.const(0, 32)) is X
    assert E.add(X, E.const(0, 32)) is X
    assert E.sub(X, X) is E.const(0, 32)
    assert E.bvnot(E.bvnot(X)) is X
    assert E.neg(E.neg(X)) is X


def test_commutative_order_puts_constant_last():
    e = E.add(E.const(1, 32), C)
    assert e.op == "add" and e.args == (C, E.const(1, 32))


def test_linear_cancellation():
    assert E.sub(E.add(C, E.const(1, 32)), E.const(1, 32)) is C


def test_subregister_views_recombine():
    lo = E.extract(X, 7, 0)
    hi = E.extract(X, 31, 8)
    assert E.concat(hi, lo) is X
    assert E.extract(E.zext(lo, 32), 7, 0) is lo


def test_equality_sign_canonical():
    assert E.eq(X, Y) is E.eq(Y, X)
    assert E.eq(E.sub(X, Y), E.const(0, 32)) is E.eq(E.sub(Y, X), E.const(0, 32))


def test_pickle_reinterns():
    e = E.ite(E.ult(X, Y), E.add(X, C), E.extract(E.mul(X, Y), 31, 0))
    assert pickle.loads(pickle.dumps(e)) is e


def test_shift_by_width_is_zero():
    assert E.evaluate(E.shl(X, Y), {"EAX": 5, "EBX": 32}) == 0
    assert E.shl(X, E.const(32, 32)) is E.const(0, 32)


# ------------------------------------------------------------------ random

_LEAVES = [E.symbol(n, 32) for n in ("a", "b", "c")]
_BINOPS = ("add", "sub", "mul", "and", "or", "xor", "shl", "lshr")


def random_expr(rng: random.Random, depth: int) -> E.Expr:
    """A random well-widthed 32-bit expression built with the raw constructors."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.3:
            return E.const(rng.choice((0, 1, 2, 0xFF, 0x80000000, rng.getrandbits(32))), 32)
        return rng.choice(_LEAVES)
    roll = rng.random()
    if roll < 0.5:
        op = rng.choice(_BINOPS)
        a, b = random_expr(rng, depth - 1), random_expr(rng, depth - 1)
        if op in ("shl", "lshr") and rng.random() < 0.7:
            b = E.const(rng.randrange(33), 32)
        return E.binary(op, a, b)
    if roll < 0.6:
        return E.unary(rng.choice(("not", "neg")), random_expr(rng, depth - 1))
    if roll < 0.75:
        a = random_expr(rng, depth - 1)
        lo = rng.randrange(32)
        hi = rng.randrange(lo, 32)
        piece = E.unary("extract", a, (hi, lo))
        w = hi - lo + 1
        if w == 32:
            return piece
        return E.unary("zext", piece, 32) if rng.random() < 0.5 else E.unary("sext", piece, 32)
    if roll < 0.85:
        a = random_expr(rng, depth - 1)
        k = rng.randrange(1, 32)
        return E.binary("concat", E.unary("extract", a, (31, k)), E.unary("extract", random_expr(rng, depth - 1), (k - 1, 0)))
    cond_op = rng.choice(("eq", "ult", "slt"))
    cond = E.binary(cond_op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    return E.ite_raw(cond, random_expr(rng, depth - 1), random_expr(rng, depth - 1))


def test_normalize_preserves_value_1000_exprs():
    rng = random.Random(20261014)
    for _ in range(1000):
        raw = random_expr(rng, 4)
        norm = E.normalize_expr(raw)
        for _ in range(64):
            env = {s.val: rng.choice((0, 1, 2, 0xFFFFFFFF, rng.getrandbits(32))) for s in _LEAVES}
            assert E.evaluate(raw, env) == E.evaluate(norm, env)


def test_normalize_idempotent():
    rng = random.Random(7)
    for _ in range(300):
        n = E.normalize_expr(random_expr(rng, 4))
        assert E.normalize_expr(n) is n


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 255))
def test_low_byte_mask_equals_zero_padded_extract(v):
    x = E.symbol("x", 32)
    a = E.zext(E.extract(x, 7, 0), 32)
    b = E.bvand(x, E.const(0xFF, 32))
    for hi in (0, 0xABCDEF00, 0xFFFFFF00):
        env = {"x": hi | v}
        assert E.evaluate(a, env) == E.evaluate(b, env)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_builders_are_value_correct(a, b):
    env = {"EAX": a, "EBX": b}
    m = 0xFFFFFFFF
    assert E.evaluate(E.add(X, Y), env) == (a + b) & m
    assert E.evaluate(E.sub(X, Y), env) == (a - b) & m
    assert E.evaluate(E.neg(X), env) == (-a) & m
    assert E.evaluate(E.ult(X, Y), env) == int(a < b)
    assert E.evaluate(E.slt(X, Y), env) == int(E.to_signed(a, 32) < E.to_signed(b, 32))
    assert E.evaluate(E.sext(E.extract(X, 7, 0), 32), env) == E.to_signed(a & 0xFF, 8) & m
    assert E.evaluate(E.msb(E.bvxor(X, Y)), env) == ((a ^ b) >> 31)
