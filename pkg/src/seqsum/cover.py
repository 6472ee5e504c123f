"""Covering a database with a fixed pattern set.

Given non-singleton episodes, the cover is found by iterating two exact
steps to a fixed point: with code lengths frozen, a dynamic program picks
the disjoint set of minimal windows with maximal total gain; with the
alignment frozen, usage statistics (and hence optimal code lengths) follow
directly.  Only minimal windows need considering: replacing any active
window by a contained minimal window never increases the encoded length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._fast import align_select, extend_windows
from .codes import COST_EPS, SENTINEL_BITS, InvariantError
from .corpus import Episode, SequenceDatabase
from .encoding import CodeLengths, UsageStats, cost_components

MAX_COVER_ITERATIONS = 100


@dataclass(frozen=True)
class Window:
    """An active window: episode X spans S_k[start..end] (0-based, inclusive)."""

    seq: int
    start: int
    end: int
    episode: Episode

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise InvariantError("window start must not exceed end")
        if self.end - self.start + 1 < len(self.episode):
            raise InvariantError("window shorter than its episode")

    @property
    def span(self) -> int:
        return self.end - self.start + 1

    @property
    def n_gaps(self) -> int:
        return self.span - len(self.episode)


@dataclass(frozen=True)
class Alignment:
    """Active windows of non-singleton patterns, disjoint per sequence."""

    windows: tuple[Window, ...]

    def validate(self) -> None:
        last: dict[int, int] = {}
        for w in sorted(self.windows, key=lambda w: (w.seq, w.start)):
            if w.episode.is_singleton:
                raise InvariantError("alignments hold non-singleton windows only")
            if w.start <= last.get(w.seq, -1):
                raise InvariantError(f"overlapping windows in sequence {w.seq}")
            last[w.seq] = w.end

    def __len__(self) -> int:
        return len(self.windows)


def minimal_window_arrays(db: SequenceDatabase, episode: Episode
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Global (starts, ends) of all minimal windows of `episode`, cached on db."""
    if len(episode) < 2:
        raise InvariantError("minimal windows are defined for non-singleton episodes")
    cached = db._window_cache.get(episode)
    if cached is not None:
        return cached
    first = episode.events[0]
    ws = db.occurrences(first)
    we = ws
    for e in episode.events[1:]:
        if ws.size == 0:
            break
        ws, we = extend_windows(ws, we, db.occurrences(e), db.pos_seq)
    result = (ws, we)
    db._window_cache[episode] = result
    return result


def find_minimal_windows(episode: Episode, db: SequenceDatabase) -> list[Window]:
    """All minimal windows of the episode, sorted by (sequence, start)."""
    ws, we = minimal_window_arrays(db, episode)
    out = []
    for s, e in zip(ws.tolist(), we.tolist()):
        k = db.seq_of(s)
        off = int(db.offsets[k])
        out.append(Window(k, s - off, e - off, episode))
    return out


def align(windows: Sequence[Window], gains: Sequence[float]) -> Alignment:
    """Disjoint subset of the given windows maximising total gain.

    Windows must already be sorted by (sequence, start); gains are taken at
    face value.  Zero-gain windows are never selected.
    """
    if len(windows) != len(gains):
        raise InvariantError("one gain per window required")
    if not windows:
        return Alignment(())
    keys = [(w.seq, w.start) for w in windows]
    if any(keys[i] > keys[i + 1] for i in range(len(keys) - 1)):
        raise InvariantError("windows must be sorted by (sequence, start)")
    big = max(w.end for w in windows) + 2
    w_start = np.array([w.seq * big + w.start for w in windows], dtype=np.int64)
    w_end = np.array([w.seq * big + w.end for w in windows], dtype=np.int64)
    sel, _ = align_select(w_start, w_end, np.asarray(gains, dtype=np.float64))
    return Alignment(tuple(windows[i] for i in sel.tolist()))


def stats_from_alignment(alignment: Alignment | Iterable[Window], db: SequenceDatabase,
                         patterns: Sequence[Episode]) -> UsageStats:
    """Usage and gap counts implied by an alignment.

    Pattern usage is the window count, gaps the summed window slack; each
    singleton's usage is its support minus its covered occurrences (counting
    multiplicity when an event repeats within an episode).
    """
    patterns = tuple(patterns)
    index = {p: i for i, p in enumerate(patterns)}
    windows = getattr(alignment, "windows", alignment)
    pu = np.zeros(len(patterns), dtype=np.int64)
    pg = np.zeros(len(patterns), dtype=np.int64)
    last: dict[int, int] = {}
    for w in sorted(windows, key=lambda w: (w.seq, w.start)):
        try:
            i = index[w.episode]
        except KeyError:
            raise InvariantError(f"window episode {w.episode} not in the pattern set")
        if w.start <= last.get(w.seq, -1):
            raise InvariantError(f"overlapping windows in sequence {w.seq}")
        last[w.seq] = w.end
        pu[i] += 1
        pg[i] += w.n_gaps
    su = db.supports.copy()
    for i, p in enumerate(patterns):
        if pu[i]:
            np.subtract.at(su, np.asarray(p.events, dtype=np.int64), pu[i])
    if np.any(su < 0):
        raise InvariantError("alignment covers an event more often than it occurs")
    return UsageStats(patterns, su, pu, pg)


def check_iteration_invariants(stats: UsageStats, lengths: CodeLengths,
                               total_events: int, tol: float = 1e-9) -> None:
    """Kraft equality and the fills/coverage identities for one cover state."""
    su = stats.singleton_usage
    pu = stats.pattern_usage
    kraft = float(np.sum(np.exp2(-lengths.singleton_bits[su > 0]))
                  + np.sum(np.exp2(-lengths.pattern_bits[pu > 0])))
    if abs(kraft - 1.0) > tol:
        raise InvariantError(f"pattern-stream Kraft sum {kraft} != 1")
    plens = np.array([len(p) for p in stats.patterns], dtype=np.int64)
    fills = pu * (plens - 1) if len(plens) else pu
    both = (stats.pattern_gaps > 0) & (fills > 0)
    gap_kraft = np.exp2(-lengths.gap_bits[both]) + np.exp2(-lengths.nogap_bits[both])
    if both.any() and np.max(np.abs(gap_kraft - 1.0)) > tol:
        raise InvariantError("gap-code Kraft sum != 1 for some entry")
    if np.any(su < 0) or np.any(pu < 0) or np.any(stats.pattern_gaps < 0):
        raise InvariantError("negative count in usage stats")
    covered = int((pu * plens).sum()) if len(plens) else 0
    if int(su.sum()) + covered != total_events:
        raise InvariantError("coverage identity violated")


class CoverRecorder:
    """Aggregates cover-loop behaviour across the many calls a search makes."""

    def __init__(self) -> None:
        self.max_iterations = 0
        self.cap_hits = 0
        self.calls = 0

    def note(self, iterations: int) -> None:
        self.calls += 1
        self.max_iterations = max(self.max_iterations, iterations)
        if iterations >= MAX_COVER_ITERATIONS:
            self.cap_hits += 1


@dataclass(eq=False)
class CoverResult:
    """Converged cover: alignment, statistics and encoded size."""

    db: SequenceDatabase
    patterns: tuple[Episode, ...]
    stats: UsageStats
    lengths: CodeLengths
    model_bits: float
    data_bits: float
    iterations: int
    w_start: np.ndarray  # global coordinates of selected windows, ascending
    w_end: np.ndarray
    w_pat: np.ndarray    # index into `patterns` per selected window

    @property
    def total_bits(self) -> float:
        return self.model_bits + self.data_bits

    @property
    def alignment(self) -> Alignment:
        out = []
        for s, e, i in zip(self.w_start.tolist(), self.w_end.tolist(),
                           self.w_pat.tolist()):
            k = self.db.seq_of(s)
            off = int(self.db.offsets[k])
            out.append(Window(k, s - off, e - off, self.patterns[i]))
        return Alignment(tuple(out))

    def window_gains(self) -> np.ndarray:
        """Gain of every selected window under the converged code lengths."""
        return _gains_for(self.w_start, self.w_end, self.w_pat, self.patterns,
                          self.lengths.singleton_bits, self.lengths.pattern_bits,
                          self.lengths.gap_bits, self.lengths.nogap_bits)


def _gains_for(w_start, w_end, w_pat, patterns, singleton_bits, pattern_bits,
               gap_bits, nogap_bits) -> np.ndarray:
    plens = np.array([len(p) for p in patterns], dtype=np.int64)
    base = np.empty(len(patterns))
    for i, p in enumerate(patterns):
        ev = np.asarray(p.events, dtype=np.int64)
        base[i] = (singleton_bits[ev].sum() - pattern_bits[i]
                   - (len(p) - 1) * nogap_bits[i])
    if len(w_pat) == 0:
        return np.zeros(0)
    slack = w_end - w_start + 1 - plens[w_pat]
    return base[w_pat] - slack * gap_bits[w_pat]


def sqs_cover(db: SequenceDatabase, patterns: Sequence[Episode], *,
              validate: bool = False, recorder: CoverRecorder | None = None
              ) -> CoverResult:
    """Iterate align/re-estimate to a fixed point for the given pattern set.

    Initialisation: singleton usage = support, pattern usage = number of
    minimal windows, gaps(X) = |X| - 1, and both gap codes at one bit.  The
    loop stops when the alignment repeats, when the total encoded length
    stops improving (< 1e-9 bits), or at the 100-iteration cap.
    """
    patterns = tuple(patterns)
    if len(set(patterns)) != len(patterns):
        raise InvariantError("pattern set contains duplicates")
    for p in patterns:
        if p.is_singleton:
            raise InvariantError("cover patterns must be non-singleton")

    n_pat = len(patterns)
    plens = np.array([len(p) for p in patterns], dtype=np.int64)
    st_sums = np.array([db.st_sum(p) for p in patterns], dtype=np.float64)
    parts_s = []
    parts_e = []
    parts_p = []
    for i, p in enumerate(patterns):
        ws, we = minimal_window_arrays(db, p)
        parts_s.append(ws)
        parts_e.append(we)
        parts_p.append(np.full(ws.size, i, dtype=np.int64))
    if parts_s:
        w_start = np.concatenate(parts_s)
        w_end = np.concatenate(parts_e)
        w_pat = np.concatenate(parts_p)
        order = np.lexsort((w_pat, w_end, w_start))
        w_start, w_end, w_pat = w_start[order], w_end[order], w_pat[order]
    else:
        w_start = w_end = w_pat = np.zeros(0, dtype=np.int64)

    # initial statistics
    su = db.supports.copy()
    pu = np.bincount(w_pat, minlength=n_pat).astype(np.int64)
    pg = plens - 1 if n_pat else plens
    stats = UsageStats(patterns, su, pu, pg)
    lengths = CodeLengths.from_stats(stats)
    lengths.gap_bits = np.ones(n_pat)
    lengths.nogap_bits = np.ones(n_pat)

    prev_key: bytes | None = None
    prev_cost = np.inf
    model_bits = data_bits = np.nan
    sel = np.zeros(0, dtype=np.int64)
    iterations = 0
    if w_start.size == 0:
        iterations = 1
        stats = UsageStats(patterns, su, pu, pg)
        lengths = CodeLengths.from_stats(stats)
        model_bits, data_bits = cost_components(db, stats, st_sums)
        if validate:
            check_iteration_invariants(stats, lengths, db.total_events)
    else:
        for _ in range(MAX_COVER_ITERATIONS):
            iterations += 1
            gains = _gains_for(w_start, w_end, w_pat, patterns,
                               lengths.singleton_bits, lengths.pattern_bits,
                               lengths.gap_bits, lengths.nogap_bits)
            new_sel, _ = align_select(w_start, w_end, gains)
            key = new_sel.tobytes()
            if key == prev_key:
                break
            sel = new_sel
            su = db.supports.copy()
            pu = np.bincount(w_pat[sel], minlength=n_pat).astype(np.int64)
            pg = np.zeros(n_pat, dtype=np.int64)
            np.add.at(pg, w_pat[sel], w_end[sel] - w_start[sel] + 1 - plens[w_pat[sel]])
            for i in range(n_pat):
                if pu[i]:
                    np.subtract.at(su, np.asarray(patterns[i].events, dtype=np.int64),
                                   pu[i])
            if np.any(su < 0):
                raise InvariantError("alignment covers an event more often than it occurs")
            stats = UsageStats(patterns, su, pu, pg)
            lengths = CodeLengths.from_stats(stats)
            model_bits, data_bits = cost_components(db, stats, st_sums)
            if validate:
                check_iteration_invariants(stats, lengths, db.total_events)
            cost = model_bits + data_bits
            prev_key = key
            if prev_cost - cost < COST_EPS:
                break
            prev_cost = cost

    if recorder is not None:
        recorder.note(iterations)
    return CoverResult(db, patterns, stats, lengths, float(model_bits),
                       float(data_bits), iterations,
                       w_start[sel], w_end[sel], w_pat[sel])
