"""Corpus loading, per-pair evaluation and aggregate statistics."""

from __future__ import annotations

import json
import logging
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .equivalence import EquivalenceConfig
from .evaluator import SEM_ABORTED, SEM_TIMEOUT, evaluate_pair
from .metrics import METRIC_NAMES, metric_vector

log = logging.getLogger(__name__)

SIGNALS = ("sem",) + METRIC_NAMES


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class PairRecord:
    id: str
    ground_truth: str
    prediction: str
    intent: str | None = None
    human_label: int | None = None


def _record(obj: object, lineno: int) -> PairRecord:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: expected an object")
    for name in ("id", "ground_truth", "prediction"):
        if name not in obj:
            raise CorpusError(f"line {lineno}: missing field '{name}'")
    rid, gt, pred = obj["id"], obj["ground_truth"], obj["prediction"]
    if not isinstance(rid, str) or not rid:
        raise CorpusError(f"line {lineno}: 'id' must be a non-empty string")
    if not isinstance(gt, str) or not gt.strip():
        raise CorpusError(f"line {lineno}: 'ground_truth' must be a non-empty string")
    if not isinstance(pred, str):
        raise CorpusError(f"line {lineno}: 'prediction' must be a string")
    intent = obj.get("intent")
    if intent is not None and not isinstance(intent, str):
        raise CorpusError(f"line {lineno}: 'intent' must be a string")
    label = obj.get("human_label")
    if label is not None and (isinstance(label, bool) or label not in (0, 1)):
        raise CorpusError(f"line {lineno}: 'human_label' must be 0 or 1")
    return PairRecord(rid, gt, pred, intent, label)


def load_corpus(path: str | Path) -> list[PairRecord]:
    records: list[PairRecord] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed record ({exc.msg})") from None
            rec = _record(obj, lineno)
            if rec.id in seen:
                raise CorpusError(f"line {lineno}: duplicate id '{rec.id}' (first on line {seen[rec.id]})")
            seen[rec.id] = lineno
            records.append(rec)
    return records


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    if len(xs) < 2:
        raise ValueError("need at least two points")
    try:
        r = statistics.correlation([float(x) for x in xs], [float(y) for y in ys])
    except statistics.StatisticsError as exc:
        raise ValueError(str(exc)) from None
    return max(-1.0, min(1.0, r))


def evaluate_record(rec: PairRecord, cfg: EquivalenceConfig, max_steps: int) -> dict:
    v = evaluate_pair(rec.prediction, rec.ground_truth, cfg, max_steps)
    return {
        "id": rec.id,
        "syn": v.syn,
        "sem": v.sem,
        "stage": v.stage,
        "detail": v.detail,
        "metrics": metric_vector(rec.prediction, rec.ground_truth).as_dict(),
        "elapsed": v.elapsed,
    }


def _signal(row: dict, name: str) -> float:
    return row["sem"] if name == "sem" else row["metrics"][name]


def aggregate(rows: Sequence[dict], labels: Iterable[int | None] | None = None) -> dict:
    if not rows:
        raise ValueError("no results to aggregate")
    n = len(rows)
    out: dict = {
        "n_pairs": n,
        "mean_sem": sum(r["sem"] for r in rows) / n,
        "mean_syn": sum(r["syn"] for r in rows) / n,
        "aborted": sum(r["stage"] == SEM_ABORTED for r in rows),
        "timed_out": sum(r["stage"] == SEM_TIMEOUT for r in rows),
    }
    for m in METRIC_NAMES:
        out[f"mean_{m}"] = sum(r["metrics"][m] for r in rows) / n
    labels = list(labels) if labels is not None else [None] * n
    if len(labels) != n:
        raise ValueError("one label per result is required")
    labelled = [(r, h) for r, h in zip(rows, labels) if h is not None]
    if not labelled:
        return out
    hs = [h for _, h in labelled]
    mean_h = sum(hs) / len(hs)
    out["n_labelled"] = len(labelled)
    out["mean_human"] = mean_h
    out["matching_rate"] = sum(r["sem"] == h for r, h in labelled) / len(labelled)
    out["offset"] = {}
    out["pearson"] = {}
    for s in SIGNALS:
        xs = [_signal(r, s) for r, _ in labelled]
        out["offset"][s] = abs(mean_h - sum(xs) / len(xs))
        try:
            out["pearson"][s] = pearson_r(xs, hs)
        except ValueError as exc:
            log.warning("pearson for %s undefined: %s", s, exc)
            out["pearson"][s] = None
    return out


def build_report(records: Sequence[PairRecord], rows: Sequence[dict], max_steps: int,
                 cfg: EquivalenceConfig) -> dict:
    elapsed = [r["elapsed"] for r in rows]
    return {
        "config": {"max_steps": max_steps, "samples": cfg.concretization_samples, "seed": cfg.rng_seed},
        "aggregates": aggregate(rows, [rec.human_label for rec in records]),
        "per_pair": list(rows),
        "timing": {
            "median_elapsed": statistics.median(elapsed),
            "total_elapsed": math.fsum(elapsed),
        },
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
