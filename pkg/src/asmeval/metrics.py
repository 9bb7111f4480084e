"""Output-similarity baselines: EM, edit similarity, two BLEU-4 variants, CA."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass

from .frontend import assemble
from .kernels import levenshtein

EPSILON = 1e-9
MAX_N = 4

_BLEU_SPLIT = re.compile(r"([,\[\]])")
_SACRE_TOKEN = re.compile(r"\w+|[^\w\s]")


def normalize_text(s: str) -> str:
    """Canonical layout: escaped newlines expanded, trailing blanks and empty lines dropped."""
    lines = (line.rstrip() for line in s.replace("\\n", "\n").split("\n"))
    return "\n".join(line for line in lines if line)


def exact_match(pred: str, ref: str) -> int:
    return int(normalize_text(pred) == normalize_text(ref))


def edit_similarity(pred: str, ref: str) -> float:
    p, r = normalize_text(pred), normalize_text(ref)
    longest = max(len(p), len(r))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(p, r) / longest


def bleu_tokens(s: str) -> list[str]:
    return _BLEU_SPLIT.sub(r" \1 ", normalize_text(s)).split()


def sacre_tokens(s: str) -> list[str]:
    return _SACRE_TOKEN.findall(normalize_text(s))


def _ngrams(toks: list[str], n: int) -> Counter:
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def bleu_from_tokens(pred: list[str], ref: list[str]) -> float:
    """Sentence BLEU-4, uniform weights, add-epsilon smoothing on zero matches.

    An order with no n-grams on either side contributes a precision of 1.
    """
    if not pred:
        return 1.0 if not ref else 0.0
    log_sum = 0.0
    for n in range(1, MAX_N + 1):
        pc, rc = _ngrams(pred, n), _ngrams(ref, n)
        total = sum(pc.values())
        if total == 0:
            p = 1.0 if not rc else EPSILON
        else:
            hits = sum(min(c, rc[g]) for g, c in pc.items())
            p = hits / total if hits else EPSILON / total
        log_sum += math.log(p)
    bp = 1.0 if len(pred) >= len(ref) else math.exp(1.0 - len(ref) / len(pred))
    return bp * math.exp(log_sum / MAX_N)


def bleu4(pred: str, ref: str) -> float:
    return bleu_from_tokens(bleu_tokens(pred), bleu_tokens(ref))


def sacrebleu_like(pred: str, ref: str) -> float:
    return bleu_from_tokens(sacre_tokens(pred), sacre_tokens(ref))


def compilation_accuracy(pred: str) -> int:
    outcome, _ = assemble(pred)
    return int(outcome.ok)


@dataclass(frozen=True)
class MetricVector:
    ca: int
    bleu4: float
    sacrebleu: float
    edit: float
    em: int

    def as_dict(self) -> dict:
        return asdict(self)


METRIC_NAMES = ("ca", "bleu4", "sacrebleu", "edit", "em")


def metric_vector(pred: str, ref: str) -> MetricVector:
    return MetricVector(
        compilation_accuracy(pred), bleu4(pred, ref), sacrebleu_like(pred, ref),
        edit_similarity(pred, ref), exact_match(pred, ref),
    )
