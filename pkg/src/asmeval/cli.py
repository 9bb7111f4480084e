"""Command line entry point: ``asmeval eval --pairs corpus.jsonl --out report.json``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from .equivalence import EquivalenceConfig
from .evaluator import DataError
from .report import CorpusError, build_report, dumps, evaluate_record, load_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"must be an unsigned 64-bit value, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asmeval", description="Assess generated assembly snippets.")
    sub = parser.add_subparsers(dest="command", required=True)
    ev = sub.add_parser("eval", help="evaluate a corpus of prediction/reference pairs")
    ev.add_argument("--pairs", required=True, help="input corpus, one JSON object per line")
    ev.add_argument("--out", required=True, help="where to write the JSON report")
    ev.add_argument("--max-steps", type=_positive, default=100)
    ev.add_argument("--samples", type=_positive, default=64, help="concretization samples per comparison")
    ev.add_argument("--seed", type=_u64, default=0)
    ev.add_argument("--jobs", type=_positive, default=1)
    return parser


def run_eval(args: argparse.Namespace) -> int:
    try:
        records = load_corpus(args.pairs)
    except OSError as exc:
        print(f"asmeval: cannot read {args.pairs}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorpusError as exc:
        print(f"asmeval: {args.pairs}: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not records:
        print(f"asmeval: {args.pairs}: corpus is empty", file=sys.stderr)
        return EXIT_DATA
    cfg = EquivalenceConfig(args.samples, args.seed)
    work = partial(evaluate_record, cfg=cfg, max_steps=args.max_steps)
    try:
        if args.jobs == 1:
            rows = [work(rec) for rec in records]
        else:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(work, records, chunksize=4))
    except DataError as exc:
        print(f"asmeval: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    report = build_report(records, rows, args.max_steps, cfg)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    except OSError as exc:
        print(f"asmeval: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    agg = report["aggregates"]
    line = f"{agg['n_pairs']} pairs  SYN={agg['mean_syn']:.3f}  SEM={agg['mean_sem']:.3f}"
    if "matching_rate" in agg:
        line += f"  matching={agg['matching_rate']:.3f}  offset={agg['offset']['sem']:.3f}"
    print(f"{line}  -> {args.out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "eval":
        return run_eval(args)
    return EXIT_USAGE  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
