"""Per-pair pipeline producing the (SYN, SEM) verdict."""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

from .equivalence import EquivalenceConfig, outcomes_equivalent
from .frontend import ProgramUnit, assemble
from .metrics import normalize_text
from .symexec import ABORTED, DEFAULT_MAX_STEPS, STEP_LIMIT, ExecOutcome, explore

STRING_MATCH = "StringMatch"
SYNTAX_FAIL = "SyntaxFail"
SEM_COMPARED = "SemCompared"
SEM_TIMEOUT = "SemTimeout"
SEM_ABORTED = "SemAborted"


class DataError(Exception):
    """The reference side of a pair is unusable (does not assemble or does not terminate)."""


@dataclass(frozen=True)
class Verdict:
    syn: int
    sem: int
    stage: str
    elapsed: float
    detail: str = ""


class _Counter:
    explore_calls = 0


counters = _Counter()


def _explore(program: ProgramUnit, max_steps: int) -> ExecOutcome:
    counters.explore_calls += 1
    return explore(program, max_steps)


@lru_cache(maxsize=4096)
def _reference_program(ref: str) -> ProgramUnit:
    outcome, program = assemble(ref)
    if program is None:
        raise DataError(f"reference does not assemble: {'; '.join(outcome.messages) or outcome.status}")
    return program


@lru_cache(maxsize=4096)
def _reference(ref: str, max_steps: int) -> ExecOutcome:
    result = _explore(_reference_program(ref), max_steps)
    if result.exhausted:
        kinds = sorted(result.termination_kinds - {"ReachedExit"})
        raise DataError(f"reference exploration exhausted ({', '.join(kinds)})")
    return result


def evaluate_pair(pred: str, ref: str, cfg: EquivalenceConfig | None = None,
                  max_steps: int = DEFAULT_MAX_STEPS) -> Verdict:
    cfg = cfg or EquivalenceConfig()
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    t0 = time.perf_counter()
    if normalize_text(pred) == normalize_text(ref):
        _reference_program(ref)  # bad reference data is still reported
        return Verdict(1, 1, STRING_MATCH, time.perf_counter() - t0)
    ref_outcome = _reference(ref, max_steps)
    try:
        outcome, program = assemble(pred)
    except ValueError as exc:
        return Verdict(0, 0, SYNTAX_FAIL, time.perf_counter() - t0, str(exc))
    if program is None:
        detail = "; ".join(outcome.messages) or outcome.status
        return Verdict(0, 0, SYNTAX_FAIL, time.perf_counter() - t0, detail)
    result = _explore(program, max_steps)
    if result.exhausted:
        kinds = result.termination_kinds
        stage = SEM_ABORTED if ABORTED in kinds else SEM_TIMEOUT
        reasons = sorted({leaf.reason for leaf in result.leaves if leaf.reason})
        detail = STEP_LIMIT if stage == SEM_TIMEOUT else "; ".join(reasons)
        return Verdict(1, 0, stage, time.perf_counter() - t0, detail)
    sem = int(outcomes_equivalent(result, ref_outcome, cfg))
    return Verdict(1, sem, SEM_COMPARED, time.perf_counter() - t0,
                   f"{len(result.leaves)} vs {len(ref_outcome.leaves)} leaves")
