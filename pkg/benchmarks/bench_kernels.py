"""Compare the compiled kernels with the numpy/Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import random
import sys
import time
from pathlib import Path

import numpy as np

from asmeval import _pykernels
from asmeval.tape import compile_tape

try:
    from asmeval import _ckernels
except ImportError:
    _ckernels = None

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from test_expr import random_expr  # noqa: E402


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_tape(repeat, n_roots=200, samples=256):
    rng = random.Random(1)
    tape = compile_tape([random_expr(rng, 5) for _ in range(n_roots)])
    inputs = np.random.default_rng(0).integers(0, 1 << 32, size=(len(tape.inputs), samples), dtype=np.uint64)
    args = (tape.op, tape.a, tape.b, tape.c, tape.p, tape.w, tape.k, inputs)
    impls = {"python": _pykernels, "cython": _ckernels}
    return f"eval_tape ({len(tape.op)} nodes x {samples} samples)", {
        name: best_of(lambda m=mod: m.eval_tape(*args), repeat) for name, mod in impls.items() if mod
    }


def bench_levenshtein(repeat, pairs=200):
    rng = random.Random(2)
    words = ["mov", "eax", "ebx", ",", "push", "pop", "xor", "\n", "0x80", "int"]
    data = [(" ".join(rng.choices(words, k=20)), " ".join(rng.choices(words, k=20))) for _ in range(pairs)]

    def run(mod):
        for s, t in data:
            mod.levenshtein(s, t)

    impls = {"python": _pykernels, "cython": _ckernels}
    return f"levenshtein ({pairs} pairs of ~80 chars)", {
        name: best_of(lambda m=mod: run(m), repeat) for name, mod in impls.items() if mod
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; timing the fallback only")
    for label, times in (bench_tape(args.repeat), bench_levenshtein(args.repeat)):
        cells = "  ".join(f"{k}={v * 1000:8.2f} ms" for k, v in times.items())
        speedup = ""
        if len(times) == 2:
            speedup = f"  speedup x{times['python'] / times['cython']:.1f}"
        print(f"{label:45s} {cells}{speedup}")


if __name__ == "__main__":
    main()
