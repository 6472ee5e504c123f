"""Command-line pipeline: generate, mine, filter/search, cover, verify, stats.

Exit status: 0 on success, 1 on input or usage errors, 2 when an internal
invariant breaks (including a failed lossless round trip).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .codes import InvariantError
from .corpus import (CorpusError, PlantSpec, SequenceDatabase, generate_synthetic,
                     load_database, write_database, write_sidecar)
from .cover import sqs_cover
from .encoding import CodeTable, baseline_stats, decode_database, encode_database, total_cost
from .miner import MinerConfig, mine_frequent_episodes
from .search import SearchReport, sqs_candidates, sqs_search

log = logging.getLogger("seqsum")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to status 2
        self.print_usage(sys.stderr)
        raise SystemExit(f"error: {message}") from None


def _out_stream(path: str | None):
    return open(path, "w", encoding="utf-8") if path else sys.stdout


def _read_db(path: str) -> SequenceDatabase:
    with open(path, "r", encoding="utf-8") as handle:
        return load_database(handle)


def _read_patterns(path: str, db: SequenceDatabase):
    episodes = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            tokens = line.split("\t")[0].split()
            if tokens:
                episodes.append(db.episode_from_tokens(tokens))
    return episodes


def _fmt_bits(x: float) -> str:
    return f"{x:.3f}"


def _cost_report(db: SequenceDatabase, model_bits: float, data_bits: float,
                 baseline_bits: float) -> dict:
    total = model_bits + data_bits
    return {
        "model_bits": round(model_bits, 3),
        "data_bits": round(data_bits, 3),
        "total_bits": round(total, 3),
        "baseline_bits": round(baseline_bits, 3),
        "gain_bits": round(baseline_bits - total, 3),
    }


def _emit_search_report(report: SearchReport, db: SequenceDatabase,
                        output: str | None, fmt: str) -> None:
    stats = report.final_cover.stats
    if fmt == "json":
        payload = {
            "baseline_bits": round(report.baseline_bits, 3),
            "final_bits": round(report.final_bits, 3),
            "gain_bits": round(report.gain_bits, 3),
            "rounds": report.rounds,
            "candidates_considered": report.candidate_count,
            "cover_calls": report.cover_calls,
            "max_cover_iterations": report.max_cover_iterations,
            "cover_cap_hits": report.cover_cap_hits,
            "wall_time_s": round(report.wall_time_s, 3),
            "accepted_trace": [
                {"events": ev, "total_bits": round(bits, 3)}
                for ev, bits in report.trace
            ],
            "patterns": [
                {
                    "rank": i + 1,
                    "episode": list(ep.tokens(db.alphabet)),
                    "usage": stats.usage(ep),
                    "gaps": stats.gaps(ep),
                    "delta_bits": round(delta, 3),
                }
                for i, (ep, delta) in enumerate(report.ranked)
            ],
        }
        with _out_stream(output) as out:
            json.dump(payload, out, indent=2)
            out.write("\n")
    else:
        with _out_stream(output) as out:
            out.write("rank\tepisode\tusage\tgaps\tdelta_bits\n")
            for i, (ep, delta) in enumerate(report.ranked):
                out.write(f"{i + 1}\t{' '.join(ep.tokens(db.alphabet))}\t"
                          f"{stats.usage(ep)}\t{stats.gaps(ep)}\t{_fmt_bits(delta)}\n")
    log.info("baseline %.3f bits, final %.3f bits, gain %.3f bits, %d patterns",
             report.baseline_bits, report.final_bits, report.gain_bits,
             len(report.ranked))


def _cmd_generate(args) -> int:
    spec = PlantSpec(alphabet_size=args.alphabet_size,
                     sequence_length=args.length,
                     n_patterns=args.n_patterns,
                     pattern_length=args.pattern_length,
                     occurrences_per_pattern=args.occurrences,
                     gap_probability=args.gap_prob,
                     seed=args.seed)
    db, planted = generate_synthetic(spec)
    with open(args.output, "w", encoding="utf-8") as out:
        write_database(db, out)
    with open(args.output + ".json", "w", encoding="utf-8") as out:
        write_sidecar(spec, planted, db, out)
    log.info("wrote %s (%d events over %d tokens) and sidecar %s.json",
             args.output, db.total_events, db.alphabet.size, args.output)
    return 0


def _cmd_stats(args) -> int:
    db = _read_db(args.input)
    baseline = total_cost(db, CodeTable(baseline_stats(db)))
    fields = [("alphabet_size", db.alphabet.size),
              ("n_sequences", db.n_sequences),
              ("total_events", db.total_events),
              ("standard_bits", round(baseline, 3))]
    with _out_stream(args.output) as out:
        if args.format == "json":
            json.dump(dict(fields), out, indent=2)
            out.write("\n")
        else:
            for key, value in fields:
                out.write(f"{key}\t{value}\n")
    return 0


def _cmd_mine(args) -> int:
    db = _read_db(args.input)
    config = MinerConfig(sigma=args.sigma, max_window=args.max_window,
                         max_pattern_length=args.max_pattern_length)
    mined = mine_frequent_episodes(db, config)
    with _out_stream(args.output) as out:
        for episode, supp in mined:
            out.write(f"{' '.join(episode.tokens(db.alphabet))}\t{supp}\n")
    log.info("mined %d episodes at sigma=%d", len(mined), args.sigma)
    return 0


def _cmd_candidates(args) -> int:
    db = _read_db(args.input)
    episodes = _read_patterns(args.patterns, db)
    report = sqs_candidates(episodes, db)
    _emit_search_report(report, db, args.output, args.format)
    return 0


def _cmd_search(args) -> int:
    db = _read_db(args.input)
    report = sqs_search(db)
    _emit_search_report(report, db, args.output, args.format)
    return 0


def _cmd_cover(args) -> int:
    db = _read_db(args.input)
    episodes = _read_patterns(args.patterns, db)
    result = sqs_cover(db, episodes)
    baseline = total_cost(db, CodeTable(baseline_stats(db)))
    report = _cost_report(db, result.model_bits, result.data_bits, baseline)
    with _out_stream(args.output) as out:
        for w in result.alignment.windows:
            out.write(f"{w.seq}\t{w.start}\t{w.end}\t"
                      f"{' '.join(w.episode.tokens(db.alphabet))}\n")
    if args.output:
        with open(args.output + ".cost.json", "w", encoding="utf-8") as out:
            json.dump(report, out, indent=2)
            out.write("\n")
    else:
        print(json.dumps(report), file=sys.stderr)
    log.info("cover: %s", report)
    return 0


def _cmd_verify(args) -> int:
    db = _read_db(args.input)
    episodes = _read_patterns(args.patterns, db) if args.patterns else []
    result = sqs_cover(db, episodes)
    streams = encode_database(db, CodeTable(result.stats), result.alignment)
    restored = decode_database(streams, CodeTable(result.stats))
    lossless = restored == db
    print(f"lossless: {'true' if lossless else 'false'}")
    return 0 if lossless else 2


def _build_parser() -> _Parser:
    parser = _Parser(prog="seqsum",
                     description="Summarise event sequences with a small set "
                                 "of serial episodes chosen by encoded length.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("generate", _cmd_generate,
            "write a synthetic database (background noise plus planted episodes)")
    p.add_argument("--alphabet-size", type=int, required=True,
                   help="number of distinct events to draw from")
    p.add_argument("--length", type=int, required=True,
                   help="sequence length in events")
    p.add_argument("--n-patterns", type=int, default=0,
                   help="number of planted episodes (default 0)")
    p.add_argument("--pattern-length", type=int, default=5,
                   help="events per planted episode (default 5)")
    p.add_argument("--occurrences", type=int, default=10,
                   help="occurrences per planted episode (default 10)")
    p.add_argument("--gap-prob", type=float, default=0.1,
                   help="per-pair probability of a length-1 gap (default 0.1)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--output", required=True, help="database file to write; a "
                   "JSON sidecar goes to <output>.json")

    p = add("stats", _cmd_stats, "print |alphabet|, sequence and event counts, "
                                 "and the singleton-baseline bits")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")

    p = add("mine", _cmd_mine, "mine frequent serial episodes "
                               "(disjoint minimal-window support)")
    p.add_argument("--input", required=True)
    p.add_argument("--sigma", type=int, required=True, help="minimum support")
    p.add_argument("--max-window", type=int, default=15,
                   help="maximal minimal-window span (default 15)")
    p.add_argument("--max-pattern-length", type=int, default=None,
                   help="optional cap on episode length")
    p.add_argument("--output")

    p = add("candidates", _cmd_candidates,
            "select a model from a mined candidate file")
    p.add_argument("--input", required=True)
    p.add_argument("--patterns", required=True,
                   help="candidate file: tokens per line, optional tab-separated support")
    p.add_argument("--output")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")

    p = add("search", _cmd_search, "mine a model directly, parameter-free")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")

    p = add("cover", _cmd_cover, "cover the data with a fixed pattern set; "
            "alignment as TSV plus a JSON cost report")
    p.add_argument("--input", required=True)
    p.add_argument("--patterns", required=True, help="episode file, tokens per line")
    p.add_argument("--output", help="alignment TSV path; the cost report goes "
                   "to <output>.cost.json (stderr when printing to stdout)")

    p = add("verify", _cmd_verify,
            "encode then decode and compare byte-exactly")
    p.add_argument("--input", required=True)
    p.add_argument("--patterns", help="optional episode file for the model")

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except (CorpusError, FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
