"""MDL bit-cost arithmetic for code tables over event sequences.

A code table holds every singleton event plus a set of non-singleton
episodes.  All costs derive from usage statistics: how often each entry's
code appears in the pattern stream, and how many gap/no-gap marks each
non-singleton entry spends in the gap stream.  Costs are plain float bits;
zero-count codes have no valid length and are reported with a large finite
sentinel, but they always contribute exactly zero to any stream cost.

`encode_database`/`decode_database` materialise the two code streams
symbolically (entry references and gap booleans) so losslessness of the
scheme can be checked by round trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codes import (SENTINEL_BITS, InvariantError, composition_length,
                    universal_integer_length, xlog2x)
from .corpus import Alphabet, Episode, SequenceDatabase


@dataclass(eq=False)
class UsageStats:
    """Usage, gap and fill counts for every code-table entry.

    Singleton usage is an array over the alphabet; pattern usage and gaps
    are arrays aligned with `patterns`.  Fill counts are always derived as
    usage(X) * (|X| - 1), so that identity holds by construction.
    """

    patterns: tuple[Episode, ...]
    singleton_usage: np.ndarray
    pattern_usage: np.ndarray
    pattern_gaps: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.patterns)
        if len(self.pattern_usage) != n or len(self.pattern_gaps) != n:
            raise InvariantError("pattern stats must align with the pattern list")
        self._index: dict[Episode, int] | None = None

    def _pattern_index(self, episode: Episode) -> int:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.patterns)}
        try:
            return self._index[episode]
        except KeyError:
            raise InvariantError(f"{episode} is not a table entry") from None

    @property
    def total_usage(self) -> int:
        return int(self.singleton_usage.sum() + self.pattern_usage.sum())

    def usage(self, entry: Episode | int) -> int:
        if isinstance(entry, int):
            return int(self.singleton_usage[entry])
        if entry.is_singleton:
            return int(self.singleton_usage[entry.events[0]])
        return int(self.pattern_usage[self._pattern_index(entry)])

    def gaps(self, entry: Episode) -> int:
        if isinstance(entry, int) or entry.is_singleton:
            raise InvariantError("gap counts exist only for non-singleton entries")
        return int(self.pattern_gaps[self._pattern_index(entry)])

    def fills(self, entry: Episode) -> int:
        return self.usage(entry) * (len(entry) - 1)

    def copy(self) -> "UsageStats":
        return UsageStats(self.patterns, self.singleton_usage.copy(),
                          self.pattern_usage.copy(), self.pattern_gaps.copy())


def baseline_stats(db: SequenceDatabase) -> UsageStats:
    """Stats of the singleton-only cover: usage equals support."""
    empty = np.zeros(0, dtype=np.int64)
    return UsageStats((), db.supports.copy(), empty, empty)


@dataclass
class CodeTable:
    """The model: all singletons of the alphabet plus non-singleton episodes."""

    stats: UsageStats

    @property
    def patterns(self) -> tuple[Episode, ...]:
        return self.stats.patterns

    def live_patterns(self) -> list[Episode]:
        """Entries that actually carry code words (usage > 0)."""
        return [p for p, u in zip(self.patterns, self.stats.pattern_usage) if u > 0]

    def validate_final(self) -> None:
        if np.any(self.stats.pattern_usage == 0):
            raise InvariantError("finalised code table contains a zero-usage pattern")


@dataclass(frozen=True)
class StandardTable:
    """Singleton-only baseline: code lengths from event supports."""

    lengths: np.ndarray

    @classmethod
    def from_database(cls, db: SequenceDatabase) -> "StandardTable":
        return cls(db.st_lengths)


def code_lengths(entry: Episode | int, stats: UsageStats) -> tuple[float, float, float]:
    """(pattern_bits, gap_bits, nogap_bits) for one table entry.

    Zero-count codes are reported as the SENTINEL_BITS constant; singletons
    have no gap codes and report 0.0 for both gap fields.
    """
    total = stats.total_usage
    if total <= 0:
        raise InvariantError("code lengths need positive total usage")
    u = stats.usage(entry)
    pattern_bits = -math.log2(u / total) if u > 0 else SENTINEL_BITS
    if isinstance(entry, int) or entry.is_singleton:
        return pattern_bits, 0.0, 0.0
    g = stats.gaps(entry)
    m = stats.fills(entry)
    gap_bits = -math.log2(g / (g + m)) if g > 0 else SENTINEL_BITS
    nogap_bits = -math.log2(m / (g + m)) if m > 0 else SENTINEL_BITS
    return pattern_bits, gap_bits, nogap_bits


@dataclass(eq=False)
class CodeLengths:
    """Vectorised code lengths for one stats snapshot (hot-path form)."""

    singleton_bits: np.ndarray
    pattern_bits: np.ndarray
    gap_bits: np.ndarray
    nogap_bits: np.ndarray

    @classmethod
    def from_stats(cls, stats: UsageStats) -> "CodeLengths":
        total = float(stats.total_usage)
        if total <= 0:
            raise InvariantError("code lengths need positive total usage")
        log_total = math.log2(total)

        def bits(counts: np.ndarray, denom) -> np.ndarray:
            out = np.full(len(counts), SENTINEL_BITS)
            nz = counts > 0
            if np.isscalar(denom):
                out[nz] = denom - np.log2(counts[nz].astype(np.float64))
            else:
                out[nz] = np.log2(denom[nz]) - np.log2(counts[nz].astype(np.float64))
            return out

        plens = np.array([len(p) for p in stats.patterns], dtype=np.int64)
        fills = stats.pattern_usage * (plens - 1) if len(plens) else plens
        denom = (stats.pattern_gaps + fills).astype(np.float64)
        return cls(
            singleton_bits=bits(stats.singleton_usage, log_total),
            pattern_bits=bits(stats.pattern_usage, log_total),
            gap_bits=bits(stats.pattern_gaps, denom),
            nogap_bits=bits(fills, denom),
        )


def cost_components(db: SequenceDatabase, stats: UsageStats,
                    st_sums: np.ndarray | None = None) -> tuple[float, float]:
    """(model_bits, data_bits) for a code table given as raw stats.

    Zero-usage patterns carry no codes: they contribute nothing to either
    part and are left out of the table encoding entirely.
    """
    su = stats.singleton_usage
    pu = stats.pattern_usage
    pg = stats.pattern_gaps
    plens = np.array([len(p) for p in stats.patterns], dtype=np.int64)

    total = float(su.sum() + pu.sum())
    if total <= 0:
        raise InvariantError("cover must use at least one code")
    cp = total * math.log2(total) - float(xlog2x(su).sum()) - float(xlog2x(pu).sum())
    fills = pu * (plens - 1) if len(plens) else pu
    cg = float((xlog2x(pg + fills) - xlog2x(pg) - xlog2x(fills)).sum())
    data_bits = db.header_bits + cp + cg

    st = db.st_lengths
    model_bits = universal_integer_length(db.alphabet.size) + composition_length(
        db.total_events, db.alphabet.size)
    live = np.flatnonzero(pu > 0)
    p_count = int(live.size)
    p_usage = int(pu[live].sum())
    model_bits += universal_integer_length(p_count + 1)
    model_bits += universal_integer_length(p_usage + 1)
    model_bits += composition_length(p_usage, p_count)
    for i in live:
        ep = stats.patterns[i]
        st_sum = float(st_sums[i]) if st_sums is not None else float(
            sum(st[e] for e in ep.events))
        model_bits += (universal_integer_length(len(ep)) +
                       universal_integer_length(int(pg[i]) + 1) + st_sum)
    return model_bits, data_bits


def _check_cover_consistency(db: SequenceDatabase, stats: UsageStats) -> None:
    if np.any(stats.singleton_usage < 0) or np.any(stats.pattern_usage < 0):
        raise InvariantError("negative usage count")
    plens = np.array([len(p) for p in stats.patterns], dtype=np.int64)
    covered = int((stats.pattern_usage * plens).sum()) if len(plens) else 0
    if int(stats.singleton_usage.sum()) + covered != db.total_events:
        raise InvariantError("stats do not cover the database exactly")


def data_cost(db: SequenceDatabase, ct: CodeTable) -> float:
    """Encoded size of the database given the table: lengths header plus streams."""
    _check_cover_consistency(db, ct.stats)
    return cost_components(db, ct.stats)[1]


def model_cost(ct: CodeTable, db: SequenceDatabase) -> float:
    """Encoded size of the code table itself."""
    return cost_components(db, ct.stats)[0]


def total_cost(db: SequenceDatabase, ct: CodeTable) -> float:
    """Two-part total: model plus data-given-model."""
    _check_cover_consistency(db, ct.stats)
    model, data = cost_components(db, ct.stats)
    return model + data


def standard_cost(db: SequenceDatabase) -> float:
    """Total encoded size under the singleton-only baseline table."""
    return total_cost(db, CodeTable(baseline_stats(db)))


def window_gain(window, stats: UsageStats) -> float:
    """Bit saving of encoding one active window with its episode.

    Compares the window's pattern code plus gap stream against spelling the
    episode's events as singleton codes, at the code lengths implied by
    `stats`.  Zero-count code lengths enter as the finite sentinel.
    """
    episode: Episode = window.episode
    if episode.is_singleton:
        raise InvariantError("gain is defined for non-singleton windows only")
    pattern_bits, gap_bits, nogap_bits = code_lengths(episode, stats)
    n_gaps = window.end - window.start + 1 - len(episode)
    singles = 0.0
    for e in episode.events:
        u = int(stats.singleton_usage[e])
        singles += -math.log2(u / stats.total_usage) if u > 0 else SENTINEL_BITS
    return singles - pattern_bits - n_gaps * gap_bits - (len(episode) - 1) * nogap_bits


@dataclass
class EncodedStreams:
    """Materialised pattern stream and gap stream of one encoded database."""

    pattern_stream: list[Episode]
    gap_stream: list[bool]
    sequence_lengths: tuple[int, ...]
    n_sequences: int
    alphabet: Alphabet


def _alignment_windows(alignment) -> list:
    windows = getattr(alignment, "windows", alignment)
    return list(windows)


def encode_database(db: SequenceDatabase, ct: CodeTable, alignment) -> EncodedStreams:
    """Produce the two code streams for a database under a given alignment.

    Within an active window each position is consumed as the next episode
    symbol when it matches, and otherwise emitted as a gap filled by a
    singleton code.  Positions outside windows emit plain singleton codes.
    """
    per_seq: dict[int, list] = {}
    for w in _alignment_windows(alignment):
        if w.episode.is_singleton:
            raise InvariantError("alignments contain non-singleton windows only")
        per_seq.setdefault(w.seq, []).append(w)

    pattern_stream: list[Episode] = []
    gap_stream: list[bool] = []
    for k, seq in enumerate(db.sequences):
        wins = sorted(per_seq.get(k, []), key=lambda w: w.start)
        prev_end = -1
        for w in wins:
            if w.start <= prev_end:
                raise InvariantError(f"overlapping windows in sequence {k}")
            if w.end >= len(seq):
                raise InvariantError(f"window past the end of sequence {k}")
            prev_end = w.end
        pos = 0
        for w in wins:
            for p in range(pos, w.start):
                pattern_stream.append(Episode((seq[p],)))
            ev = w.episode.events
            if seq[w.start] != ev[0]:
                raise InvariantError("window content does not match its episode")
            pattern_stream.append(w.episode)
            t = 1
            for p in range(w.start + 1, w.end + 1):
                if t == len(ev):
                    raise InvariantError("window extends past its episode match")
                if seq[p] == ev[t]:
                    gap_stream.append(False)
                    t += 1
                else:
                    gap_stream.append(True)
                    pattern_stream.append(Episode((seq[p],)))
            if t != len(ev):
                raise InvariantError("window content does not match its episode")
            pos = w.end + 1
        for p in range(pos, len(seq)):
            pattern_stream.append(Episode((seq[p],)))
    return EncodedStreams(pattern_stream, gap_stream,
                          tuple(len(s) for s in db.sequences),
                          db.n_sequences, db.alphabet)


def decode_database(streams: EncodedStreams, ct: CodeTable) -> SequenceDatabase:
    """Reconstruct the database from the two code streams; must be lossless."""
    known = set(ct.patterns)
    cp = streams.pattern_stream
    cg = streams.gap_stream
    ip = ig = 0
    sequences: list[list[int]] = []
    for k in range(streams.n_sequences):
        target = streams.sequence_lengths[k]
        seq: list[int] = []
        while len(seq) < target:
            if ip >= len(cp):
                raise InvariantError("pattern stream underrun")
            entry = cp[ip]
            ip += 1
            if entry.is_singleton:
                seq.append(entry.events[0])
                continue
            if entry not in known:
                raise InvariantError(f"stream references unknown entry {entry}")
            seq.append(entry.events[0])
            t = 1
            while t < len(entry):
                if len(seq) >= target:
                    raise InvariantError("sequence overrun inside a pattern usage")
                if ig >= len(cg):
                    raise InvariantError("gap stream underrun")
                is_gap = cg[ig]
                ig += 1
                if is_gap:
                    if ip >= len(cp):
                        raise InvariantError("pattern stream underrun in a gap")
                    fill = cp[ip]
                    ip += 1
                    if not fill.is_singleton:
                        raise InvariantError("gap fills must be singleton codes")
                    seq.append(fill.events[0])
                else:
                    seq.append(entry.events[t])
                    t += 1
        sequences.append(seq)
    if ip != len(cp) or ig != len(cg):
        raise InvariantError("leftover codes after decoding all sequences")
    return SequenceDatabase(streams.alphabet, sequences)
