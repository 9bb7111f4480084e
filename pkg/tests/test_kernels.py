import random

import numpy as np
import pytest

from asmeval import _pykernels, expr as E, kernels
from asmeval.tape import compile_tape

from test_expr import random_expr

try:
    from asmeval import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def _run(impl, roots, n=64, seed=0):
    tape = compile_tape(roots)
    rng = np.random.default_rng(seed)
    inputs = rng.integers(0, 1 << 32, size=(len(tape.inputs), n), dtype=np.uint64)
    inputs[:, ::4] = rng.integers(0, 4, size=inputs[:, ::4].shape)
    out = impl.eval_tape(tape.op, tape.a, tape.b, tape.c, tape.p, tape.w, tape.k, inputs)
    return tape, inputs, out


def test_fallback_matches_reference_evaluator():
    rng = random.Random(3)
    roots = [random_expr(rng, 4) for _ in range(100)]
    tape, inputs, out = _run(_pykernels, roots)
    names = [name for name, _ in tape.inputs]
    for j in range(0, inputs.shape[1], 7):
        env = {name: int(inputs[i, j]) for i, name in enumerate(names)}
        for r in roots:
            assert int(out[tape.index[r], j]) == E.evaluate(r, env)


@needs_ext
def test_compiled_matches_fallback():
    rng = random.Random(11)
    roots = [random_expr(rng, 5) for _ in range(200)]
    roots += [E.sext(E.extract(r, 15, 0), 32) for r in roots[:20]]
    roots += [E.slt(roots[i], roots[i + 1]) for i in range(20)]
    _, _, a = _run(_pykernels, roots, n=128)
    _, _, b = _run(_ckernels, roots, n=128)
    assert np.array_equal(a, b)


def test_undef_inputs_are_shared_per_width():
    u1, u2 = E.undef("ZF@1", 1), E.undef("ZF@7", 1)
    tape = compile_tape([u1, u2])
    assert tape.inputs == [("<undef:1>", 1)]


@pytest.mark.parametrize("s,t,d", [
    ("", "", 0), ("abc", "abc", 0), ("abc", "abd", 1), ("", "abc", 3), ("kitten", "sitting", 3),
    ("flaw", "lawn", 2), ("mov eax, ebx", "mov ebx, eax", 2),
])
def test_levenshtein_known_values(s, t, d):
    assert _pykernels.levenshtein(s, t) == d
    assert kernels.levenshtein(s, t) == d


@needs_ext
def test_levenshtein_parity_random():
    rng = random.Random(5)
    alphabet = "abc ,\né"
    for _ in range(300):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randrange(12)))
        t = "".join(rng.choice(alphabet) for _ in range(rng.randrange(12)))
        assert _ckernels.levenshtein(s, t) == _pykernels.levenshtein(s, t)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
