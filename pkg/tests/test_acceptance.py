"""Acceptance suite: one test per criterion, each recording a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
lines as they happen; they are also repeated in the terminal summary).
"""

import json
import math
import random
import statistics
import time
from pathlib import Path

import asmeval
from asmeval.cli import main
from asmeval.equivalence import EquivalenceConfig, outcomes_equivalent
from asmeval.evaluator import SEM_TIMEOUT, evaluate_pair
from asmeval.frontend import EXIT_LABEL, LabelRef, assemble
from asmeval.metrics import bleu4, compilation_accuracy, edit_similarity, exact_match, metric_vector
from asmeval.report import load_corpus
from asmeval.symexec import explore

import _proggen as G

CORPUS = Path(asmeval.__file__).parent / "data" / "mini_corpus.jsonl"
RESULTS: list[str] = []

# pinned limits
FIXTURE_SECONDS = 5.0
ORACLE_PROGRAMS = 500
ORACLE_STATES = 64
ORACLE_AGREEMENT = 0.98
ORACLE_SECONDS = 300.0
STATS_TOL = 1e-9
LOOP_SECONDS = 1.0
METRIC_PAIRS = 1000
METRIC_SECONDS = 30.0
MEDIAN_SECONDS = 1.0


def _record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# ------------------------------------------------------------------ 1


FIXTURE = [
    # (prediction, ground truth, expected SEM)
    ("xor eax, eax\npush eax", "xor edx, edx\npush edx", 0),  # EAX zeroed instead of EDX
    ("xchg esi, eax", "mov esi, eax", 0),  # EAX ends up holding the old ESI
    ("jmp short esp", "L1: jmp short esp", 1),  # an unused label changes nothing
    # The reference loops back (2 paths: ECX-1 != 0 jumps, == 0 falls through); the
    # prediction always jumps (1 path). Strict leaf-count matching gives 0, and a
    # human reader also calls the prediction wrong.
    ("pop ecx\ndec ecx\njmp l1", "pop ecx\nloop l1", 0),
]


def test_criterion_1_fixture_verdicts():
    t0 = time.perf_counter()
    got = [evaluate_pair(pred, ref).sem for pred, ref, _ in FIXTURE]
    elapsed = time.perf_counter() - t0
    want = [sem for _, _, sem in FIXTURE]
    ok = got == want and elapsed < FIXTURE_SECONDS
    _record(1, "four fixture pairs", ok,
            f"SEM={got} expected {want}, {elapsed:.2f}s (limit {FIXTURE_SECONDS:.0f}s)")


# ------------------------------------------------------------------ 2


def _oracle_round(rng: random.Random, n: int):
    """One random program with its three variants, or None if undefined behaviour interferes."""
    prog = G.random_program(rng)
    text = G.render(prog)
    variants = [("identical", text)]
    rewritten = G.rewrite(prog, rng)
    if rewritten is not None:
        variants.append(("rewrite", G.render(rewritten, rng.choice(("dec", "h", "hex")))))
    variants.append(("mutation", G.render(G.mutate(prog, rng))))
    judged = []
    for kind, other in variants:
        states = G.initial_states(ORACLE_STATES, n, G.program_constants(text) + G.program_constants(other))
        differs = G.oracle_differs(text, other, states)
        if differs is None:
            return None
        judged.append((kind, other, differs))
    return text, judged


def test_criterion_2_concrete_oracle_agreement():
    rng = random.Random(20261014)
    t0 = time.perf_counter()
    total = agree = 0
    identical_fail = mutation_unsound = discarded = 0
    counts = {"identical": 0, "rewrite": 0, "mutation": 0}
    n = 0
    while n < ORACLE_PROGRAMS:
        got = _oracle_round(rng, n)
        if got is None:
            discarded += 1
            continue
        text, judged = got
        n += 1
        for kind, other, differs in judged:
            counts[kind] += 1
            sem = evaluate_pair(other, text).sem
            if kind == "identical":
                # exercise the symbolic comparison too, not only the string fast path
                _, pa = assemble(other)
                _, pb = assemble(text)
                sym = int(outcomes_equivalent(explore(pa), explore(pb), EquivalenceConfig()))
                identical_fail += sem != 1 or sym != 1
            if kind == "mutation" and differs and sem != 0:
                mutation_unsound += 1
            total += 1
            agree += sem == (0 if differs else 1)
    elapsed = time.perf_counter() - t0
    rate = agree / total
    ok = (identical_fail == 0 and mutation_unsound == 0 and rate >= ORACLE_AGREEMENT
          and elapsed < ORACLE_SECONDS)
    _record(2, "concrete oracle", ok,
            f"{n} programs ({counts}), identical misses {identical_fail}, unsound mutations "
            f"{mutation_unsound}, agreement {rate:.4f} (min {ORACLE_AGREEMENT}), "
            f"{discarded} regenerated, {elapsed:.1f}s (limit {ORACLE_SECONDS:.0f}s)")


# ------------------------------------------------------------------ 3


def _spreadsheet_pearson(xs, ys):
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(x * x for x in xs)
    syy = sum(y * y for y in ys)
    sxy = sum(x * y for x, y in zip(xs, ys))
    den = (n * sxx - sx * sx) * (n * syy - sy * sy)
    if den <= 0:
        return None
    return (n * sxy - sx * sy) / math.sqrt(den)


def _close(a, b):
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= STATS_TOL


def test_criterion_3_statistics_recomputation(tmp_path):
    out = tmp_path / "report.json"
    assert main(["eval", "--pairs", str(CORPUS), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    agg = report["aggregates"]
    labels = {r.id: r.human_label for r in load_corpus(CORPUS)}
    rows = report["per_pair"]
    hs = [labels[r["id"]] for r in rows]
    n = len(hs)
    mean_h = sum(hs) / n
    checks = [("matching_rate", agg["matching_rate"], sum(r["sem"] == h for r, h in zip(rows, hs)) / n)]
    for s in agg["offset"]:
        xs = [r["sem"] if s == "sem" else r["metrics"][s] for r in rows]
        checks.append((f"offset.{s}", agg["offset"][s], abs(mean_h - sum(xs) / n)))
        checks.append((f"pearson.{s}", agg["pearson"][s], _spreadsheet_pearson(xs, hs)))
    bad = [name for name, a, b in checks if not _close(a, b)]
    ok = n >= 30 and not bad
    _record(3, "statistics pipeline", ok,
            f"{n} labelled pairs, {len(checks)} values within {STATS_TOL:g}"
            + (f", mismatched {bad}" if bad else "")
            + f" (matching {agg['matching_rate']:.3f}, offset {agg['offset']['sem']:.3f}, "
            f"pearson {agg['pearson']['sem']:.3f})")


# ------------------------------------------------------------------ 4


def test_criterion_4_infinite_loop_times_out():
    t0 = time.perf_counter()
    v = evaluate_pair("l: jmp l", "xor eax, eax")
    elapsed = time.perf_counter() - t0
    ok = v.sem == 0 and v.stage == SEM_TIMEOUT and elapsed < LOOP_SECONDS
    _record(4, "termination bound", ok,
            f"SEM={v.sem} stage={v.stage} at the default step limit, {elapsed:.3f}s (limit {LOOP_SECONDS:.0f}s)")


# ------------------------------------------------------------------ 5


def test_criterion_5_undefined_label_repair():
    outcome, prog = assemble("je loop")
    ca = compilation_accuracy("je loop")
    syn = evaluate_pair("je loop", "cmp eax, eax\nje loop").syn
    injected = prog.instructions[prog.labels["loop"]] if prog is not None else None
    repaired = (injected is not None and injected.mnemonic == "jmp"
                and injected.operands == (LabelRef(EXIT_LABEL),) and prog.repaired_symbols == {"loop"})
    leaves = len(explore(prog).leaves) if prog is not None else 0
    ok = outcome.ok and ca == 1 and syn == 1 and repaired and leaves == 2
    _record(5, "undefined label repair", ok,
            f"status {outcome.status}, CA={ca}, SYN={syn}, injected jump to exit {repaired}, {leaves} leaves")


# ------------------------------------------------------------------ 6

_WORDS = ["mov", "xor", "push", "pop", "eax", "ebx", "ecx", "edx", "esp", ",", "[", "]", "0x80",
          "int", "jmp", "je", "l1:", "byte", "al", "+", "4", "\n", "\\n"]


def _random_text(rng: random.Random) -> str:
    if rng.random() < 0.3:
        return "".join(rng.choice("ab ,\n[]x1") for _ in range(rng.randrange(12)))
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randrange(10)))


def test_criterion_6_metric_properties():
    rng = random.Random(6)
    t0 = time.perf_counter()
    out_of_range = em_violations = edit_asym = 0
    witness = None
    for i in range(METRIC_PAIRS):
        a = _random_text(rng)
        b = a if i % 10 == 0 else (a + " " if i % 10 == 1 else _random_text(rng))
        v = metric_vector(a, b)
        if not all(0.0 <= x <= 1.0 for x in (v.bleu4, v.sacrebleu, v.edit)) or v.em not in (0, 1) or v.ca not in (0, 1):
            out_of_range += 1
        if exact_match(a, b) and not (v.edit == 1.0 and v.bleu4 == 1.0):
            em_violations += 1
        if edit_similarity(a, b) != edit_similarity(b, a):
            edit_asym += 1
        if witness is None and bleu4(a, b) != bleu4(b, a):
            witness = (a, b)
    elapsed = time.perf_counter() - t0
    ok = (out_of_range == 0 and em_violations == 0 and edit_asym == 0 and witness is not None
          and elapsed < METRIC_SECONDS)
    _record(6, "metric properties", ok,
            f"{METRIC_PAIRS} pairs, out of range {out_of_range}, em=>edit,bleu violations {em_violations}, "
            f"edit asymmetries {edit_asym}, bleu4 asymmetry witness {witness!r}, "
            f"{elapsed:.2f}s (limit {METRIC_SECONDS:.0f}s)")


# ------------------------------------------------------------------ 7


def _without_elapsed(report: dict) -> dict:
    report = dict(report)
    report.pop("timing", None)
    report["per_pair"] = [{k: v for k, v in row.items() if k != "elapsed"} for row in report["per_pair"]]
    return report


def test_criterion_7_determinism(tmp_path):
    texts = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        assert main(["eval", "--pairs", str(CORPUS), "--out", str(out), "--seed", "7"]) == 0
        texts.append(json.dumps(_without_elapsed(json.loads(out.read_text())), sort_keys=True))
    ok = texts[0] == texts[1]
    _record(7, "determinism", ok, f"two CLI runs identical apart from elapsed fields: {ok}")


# ------------------------------------------------------------------ 8


def test_criterion_8_throughput(tmp_path):
    out = tmp_path / "report.json"
    assert main(["eval", "--pairs", str(CORPUS), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    median = statistics.median(r["elapsed"] for r in report["per_pair"])
    ok = median <= MEDIAN_SECONDS and math.isclose(median, report["timing"]["median_elapsed"])
    _record(8, "throughput", ok,
            f"median per-pair time {median * 1000:.2f} ms over {len(report['per_pair'])} pairs "
            f"(limit {MEDIAN_SECONDS:.0f}s)")
