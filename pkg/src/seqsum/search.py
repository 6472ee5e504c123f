"""Model search: greedy candidate filtering and direct parameter-free search.

Both searches share one engine: a candidate episode is accepted when adding
it to the model strictly lowers the total encoded length under a fresh
cover, redundant episodes are pruned in insertion order, and the surviving
model is ranked by how many bits each episode saves.

The direct search proposes candidates with a linear scan over the current
encoding: for every table entry P it estimates, in constant time per
inspected window, how the total length would change if the shortest windows
of an extension PX were adopted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._fast import diff_join, estimate_scan
from .codes import InvariantError, composition_length, universal_integer_length
from .corpus import Episode, SequenceDatabase
from .cover import (Alignment, CoverRecorder, CoverResult, minimal_window_arrays,
                    sqs_cover, stats_from_alignment)
from .encoding import CodeLengths, CodeTable, UsageStats

MAX_SEARCH_ROUNDS = 10_000


@dataclass(frozen=True)
class JoinCounters:
    """Window counters of a candidate join: N windows and their gap totals."""

    n: int
    gaps_v: int = 0
    gaps_w: int = 0
    gaps_u: int = 0


@dataclass(frozen=True)
class CandidateScore:
    episode: Episode
    score: float


def _model_scalars(stats: UsageStats) -> tuple[int, int, int]:
    live = stats.pattern_usage > 0
    return (stats.total_usage, int(live.sum()), int(stats.pattern_usage[live].sum()))


def diff_score(p: Episode, q: Episode, counters: JoinCounters,
               ct: CodeTable, db: SequenceDatabase) -> float:
    """Change in total bits from joining N windows of p and q into p.q windows.

    Constant-time: only the codes of p, q and the joined episode change,
    plus the six affected code-table terms.  Negative means improvement.
    """
    stats = ct.stats
    same = p == q
    n = counters.n
    if n < 0 or min(counters.gaps_v, counters.gaps_w, counters.gaps_u) < 0:
        raise InvariantError("join counters must be non-negative")
    u_p = stats.usage(p)
    u_q = stats.usage(q)
    if (u_p - (2 * n if same else n)) < 0 or (not same and u_q - n < 0):
        raise InvariantError("join would drive a usage count negative")
    g_p = stats.gaps(p) if len(p) > 1 else 0
    g_q = stats.gaps(q) if len(q) > 1 else 0
    if g_p - counters.gaps_v - (counters.gaps_w if same else 0) < 0 \
            or (not same and g_q - counters.gaps_w < 0):
        raise InvariantError("join would drive a gap count negative")
    r = Episode(p.events + q.events)
    try:
        u_r, g_r = stats.usage(r), stats.gaps(r)
    except InvariantError:
        u_r, g_r = 0, 0
    total, n_pat, usage_pat = _model_scalars(stats)
    return float(diff_join(len(p), len(q), same, u_p, u_q, u_r, g_p, g_q, g_r,
                           total, n_pat, usage_pat, db.st_sum(p), db.st_sum(q),
                           n, counters.gaps_v, counters.gaps_w, counters.gaps_u))


class EncodingView:
    """Frozen per-round view of one cover: the item sequence of the encoding.

    Items are the alignment windows plus every top-level singleton position
    (gap fills are not items).  Entry ids: 0..|alphabet|-1 for singletons,
    then one id per model pattern.
    """

    def __init__(self, db: SequenceDatabase, cov: CoverResult):
        self.db = db
        self.patterns = cov.patterns
        self.stats = cov.stats
        n_omega = db.alphabet.size
        n_events = db.total_events

        covered = np.zeros(n_events, dtype=bool)
        for s, e in zip(cov.w_start.tolist(), cov.w_end.tolist()):
            covered[s:e + 1] = True
        single_pos = np.flatnonzero(~covered)
        win_gain = cov.window_gains()

        starts = np.concatenate([single_pos, cov.w_start])
        ends = np.concatenate([single_pos, cov.w_end])
        entries = np.concatenate([db.events[single_pos], n_omega + cov.w_pat])
        gains = np.concatenate([np.zeros(single_pos.size), win_gain])
        order = np.argsort(starts, kind="stable")
        self.it_start = starts[order]
        self.it_end = ends[order]
        self.it_entry = entries[order]
        self.it_gain = gains[order]
        self.it_seq = db.pos_seq[self.it_start]

        n_entries = n_omega + len(cov.patterns)
        last = np.full(n_entries, -1, dtype=np.int64)
        self.prev_same = np.empty(self.it_entry.size, dtype=np.int64)
        for i, ent in enumerate(self.it_entry.tolist()):
            self.prev_same[i] = last[ent]
            last[ent] = i
        by_entry = np.argsort(self.it_entry, kind="stable")
        self.ent_items = by_entry.astype(np.int64)
        self.ent_ptr = np.zeros(n_entries + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.it_entry, minlength=n_entries),
                  out=self.ent_ptr[1:])

        plens = np.array([len(p) for p in cov.patterns], dtype=np.int64)
        self.ent_len = np.concatenate([np.ones(n_omega, dtype=np.int64), plens])
        self.ent_usage = np.concatenate([cov.stats.singleton_usage,
                                         cov.stats.pattern_usage])
        self.ent_gaps = np.concatenate([np.zeros(n_omega, dtype=np.int64),
                                        cov.stats.pattern_gaps])
        self.ent_stsum = np.concatenate([db.st_lengths,
                                         [db.st_sum(p) for p in cov.patterns]])
        self.total_usage, self.n_pat, self.usage_pat = _model_scalars(cov.stats)
        self.max_len = max(len(s) for s in db.sequences)
        self._pattern_entry = {p: n_omega + i for i, p in enumerate(cov.patterns)}
        self.n_entries = n_entries

    def entry_for(self, episode: Episode) -> int | None:
        if episode.is_singleton:
            return episode.events[0]
        return self._pattern_entry.get(episode)

    def episode_of(self, entry: int) -> Episode:
        n_omega = self.db.alphabet.size
        if entry < n_omega:
            return Episode((entry,))
        return self.patterns[entry - n_omega]

    def occurrence_count(self, entry: int) -> int:
        return int(self.ent_ptr[entry + 1] - self.ent_ptr[entry])


def _estimate_entry(view: EncodingView, entry: int,
                    excluded: frozenset[Episode]) -> CandidateScore | None:
    occ = view.ent_items[view.ent_ptr[entry]:view.ent_ptr[entry + 1]]
    if occ.size == 0:
        return None
    p_episode = view.episode_of(entry)
    p_events = p_episode.events
    r_usage = np.zeros(view.n_entries, dtype=np.int64)
    r_gaps = np.zeros(view.n_entries, dtype=np.int64)
    for i, r_ep in enumerate(view.patterns):
        if view.stats.pattern_usage[i] > 0 and len(r_ep) > len(p_events) \
                and r_ep.events[:len(p_events)] == p_events:
            x_entry = view.entry_for(Episode(r_ep.events[len(p_events):]))
            if x_entry is not None:
                r_usage[x_entry] = view.stats.pattern_usage[i]
                r_gaps[x_entry] = view.stats.pattern_gaps[i]
    best = estimate_scan(entry, view.it_start, view.it_end, view.it_entry,
                         view.it_gain, view.it_seq, view.prev_same, occ,
                         view.ent_len, view.ent_usage, view.ent_gaps,
                         view.ent_stsum, r_usage, r_gaps,
                         view.total_usage, view.n_pat, view.usage_pat,
                         view.max_len)
    order = np.argsort(best, kind="stable")
    for x in order.tolist():
        if best[x] >= 0.0:
            break
        candidate = Episode(p_events + view.episode_of(x).events)
        if candidate not in excluded:
            return CandidateScore(candidate, float(best[x]))
    return None


def estimate(p: Episode, alignment: Alignment, db: SequenceDatabase,
             patterns: tuple[Episode, ...] = (),
             excluded: frozenset[Episode] = frozenset()) -> CandidateScore | None:
    """Best-estimated extension of entry p under the given alignment, if any.

    Returns None when no extension has a negative estimated score.
    """
    patterns = tuple(patterns)
    stats = stats_from_alignment(alignment, db, patterns)
    lengths = CodeLengths.from_stats(stats)
    windows = sorted(alignment.windows, key=lambda w: (w.seq, w.start))
    pat_index = {q: i for i, q in enumerate(patterns)}
    w_start = np.array([int(db.offsets[w.seq]) + w.start for w in windows],
                       dtype=np.int64)
    w_end = np.array([int(db.offsets[w.seq]) + w.end for w in windows],
                     dtype=np.int64)
    w_pat = np.array([pat_index[w.episode] for w in windows], dtype=np.int64)
    cov = CoverResult(db, patterns, stats, lengths, 0.0, 0.0, 0,
                      w_start, w_end, w_pat)
    view = EncodingView(db, cov)
    entry = view.entry_for(p)
    if entry is None:
        raise InvariantError(f"{p} is not a current table entry")
    return _estimate_entry(view, entry, excluded)


def _mw_count(db: SequenceDatabase, episode: Episode) -> int:
    return minimal_window_arrays(db, episode)[0].size


def _tie_key(db: SequenceDatabase, episode: Episode) -> tuple:
    return (-_mw_count(db, episode), len(episode), episode.events)


class _ModelSearch:
    """Shared engine: strict-improvement acceptance plus insertion-order pruning."""

    def __init__(self, db: SequenceDatabase, validate: bool = False):
        self.db = db
        self.validate = validate
        self.recorder = CoverRecorder()
        self.model: list[Episode] = []
        self.cur = self.cover([])
        self.baseline = self.cur.total_bits
        self.trace: list[tuple[str, float]] = []

    def cover(self, patterns: list[Episode]) -> CoverResult:
        return sqs_cover(self.db, patterns, validate=self.validate,
                         recorder=self.recorder)

    def try_add(self, episode: Episode) -> bool:
        if episode in self.model:
            return False
        cand = self.cover(self.model + [episode])
        if not cand.total_bits < self.cur.total_bits:
            return False
        self.model.append(episode)
        self.cur = cand
        self.prune(full=False)
        self.trace.append((" ".join(map(str, episode.events)), self.cur.total_bits))
        return True

    def _removal_table_delta(self, episode: Episode) -> float:
        """Model-cost drop from deleting one entry from the current table."""
        stats = self.cur.stats
        u = stats.usage(episode)
        if u == 0:
            return 0.0
        g = stats.gaps(episode)
        _, n_pat, usage_pat = _model_scalars(stats)
        delta = (universal_integer_length(n_pat + 1)
                 - universal_integer_length(n_pat))
        delta += (universal_integer_length(usage_pat + 1)
                  - universal_integer_length(usage_pat - u + 1))
        delta += (composition_length(usage_pat, n_pat)
                  - composition_length(usage_pat - u, n_pat - 1))
        delta += (universal_integer_length(len(episode))
                  + universal_integer_length(g + 1) + self.db.st_sum(episode))
        return delta

    def _window_gain_total(self, episode: Episode) -> float:
        idx = self.cur.patterns.index(episode)
        gains = self.cur.window_gains()
        return float(gains[self.cur.w_pat == idx].sum())

    def prune(self, full: bool) -> None:
        for episode in list(self.model):
            if episode not in self.model:
                continue
            if not full:
                g = self._window_gain_total(episode)
                if g >= self._removal_table_delta(episode):
                    continue
            reduced = [p for p in self.model if p != episode]
            cand = self.cover(reduced)
            if cand.total_bits < self.cur.total_bits:
                self.model = reduced
                self.cur = cand

    def drop_unused(self) -> None:
        """Zero-usage episodes carry no codes and leave the finalised table."""
        kept = [p for p in self.model if self.cur.stats.usage(p) > 0]
        if len(kept) != len(self.model):
            self.model = kept
            self.cur = self.cover(kept)


@dataclass(eq=False)
class SearchReport:
    """Outcome of one model search, with the ranked model and run metadata."""

    db: SequenceDatabase
    ranked: list[tuple[Episode, float]]
    baseline_bits: float
    final_bits: float
    rounds: int
    candidate_count: int
    trace: list[tuple[str, float]]
    max_cover_iterations: int
    cover_cap_hits: int
    cover_calls: int
    wall_time_s: float
    final_cover: CoverResult = field(repr=False, default=None)

    @property
    def patterns(self) -> list[Episode]:
        return [ep for ep, _ in self.ranked]

    @property
    def gain_bits(self) -> float:
        return self.baseline_bits - self.final_bits


def rank_patterns(patterns, db: SequenceDatabase, *,
                  base: CoverResult | None = None,
                  recorder: CoverRecorder | None = None
                  ) -> list[tuple[Episode, float]]:
    """Bits lost when removing each episode from the model, sorted descending."""
    patterns = list(patterns)
    if base is None:
        base = sqs_cover(db, patterns, recorder=recorder)
    out = []
    for episode in patterns:
        reduced = [p for p in patterns if p != episode]
        loss = sqs_cover(db, reduced, recorder=recorder).total_bits - base.total_bits
        out.append((episode, float(loss)))
    out.sort(key=lambda item: (-item[1], len(item[0]), item[0].events))
    return out


def prune(patterns, db: SequenceDatabase, full: bool) -> list[Episode]:
    """Standalone pruning pass over a pattern set, in insertion order."""
    engine = _ModelSearch(db)
    engine.model = list(patterns)
    engine.cur = engine.cover(engine.model)
    engine.prune(full)
    return engine.model


def _finish(engine: _ModelSearch, rounds: int, candidate_count: int,
            t0: float) -> SearchReport:
    engine.prune(full=True)
    engine.drop_unused()
    ranked = rank_patterns(engine.model, engine.db, base=engine.cur,
                           recorder=engine.recorder)
    rec = engine.recorder
    return SearchReport(engine.db, ranked, engine.baseline,
                        engine.cur.total_bits, rounds, candidate_count,
                        engine.trace, rec.max_iterations, rec.cap_hits,
                        rec.calls, time.perf_counter() - t0, engine.cur)


def sqs_candidates(candidates, db: SequenceDatabase, *,
                   validate: bool = False) -> SearchReport:
    """Filter a candidate collection down to the episodes that pay their way.

    Candidates are ordered by the total bits of the single-episode model,
    then greedily accepted on strict improvement with heuristic pruning, and
    finally fully pruned and ranked by removal impact.
    """
    t0 = time.perf_counter()
    seen = dict.fromkeys(ep for ep in candidates)
    for ep in seen:
        if ep.is_singleton:
            raise InvariantError("candidates must be non-singleton episodes")
    engine = _ModelSearch(db, validate=validate)
    scored = sorted(((sqs_cover(db, [ep], recorder=engine.recorder).total_bits,
                      _tie_key(db, ep), ep) for ep in seen),
                    key=lambda item: item[:2])
    for _, _, episode in scored:
        engine.try_add(episode)
    return _finish(engine, rounds=1, candidate_count=len(seen), t0=t0)


def _gap_augmentations(db: SequenceDatabase, cov: CoverResult,
                       episode: Episode) -> list[Episode]:
    """Variants of an episode with one observed gap event inserted."""
    idx = cov.patterns.index(episode)
    events = db.events
    ev = episode.events
    pairs: set[tuple[int, int]] = set()
    mask = cov.w_pat == idx
    for s, e in zip(cov.w_start[mask].tolist(), cov.w_end[mask].tolist()):
        t = 0
        for p in range(s, e + 1):
            if t < len(ev) and int(events[p]) == ev[t]:
                t += 1
            else:
                pairs.add((t, int(events[p])))
    out = []
    for t, g in sorted(pairs):
        out.append(Episode(ev[:t] + (g,) + ev[t:]))
    return out


def sqs_search(db: SequenceDatabase, *, validate: bool = False) -> SearchReport:
    """Parameter-free direct search over extensions of current table entries.

    Rounds of batched estimation and greedy acceptance; each accepted
    episode is recursively retried with its observed gap events inserted.
    Rounds repeat while the model changes.
    """
    t0 = time.perf_counter()
    engine = _ModelSearch(db, validate=validate)
    rounds = 0
    candidate_count = 0
    changed = True
    while changed and rounds < MAX_SEARCH_ROUNDS:
        rounds += 1
        changed = False
        view = EncodingView(db, engine.cur)
        excluded = frozenset(engine.model)
        proposals: list[CandidateScore] = []
        entry_order = list(range(db.alphabet.size)) + [
            view.entry_for(p) for p in engine.cur.patterns
            if engine.cur.stats.usage(p) > 0]
        for entry in entry_order:
            if view.occurrence_count(entry) == 0:
                continue
            cand = _estimate_entry(view, entry, excluded)
            if cand is not None:
                proposals.append(cand)
        candidate_count += len(proposals)
        proposals.sort(key=lambda c: (c.score, _tie_key(db, c.episode)))
        rejected: set[Episode] = set()
        for cand in proposals:
            episode = cand.episode
            if episode in engine.model or episode in rejected:
                continue
            if engine.try_add(episode):
                changed = True
                stack = [episode]
                while stack:
                    base_ep = stack.pop()
                    if base_ep not in engine.model:
                        continue
                    for aug in _gap_augmentations(db, engine.cur, base_ep):
                        if aug in engine.model or aug in rejected:
                            continue
                        if engine.try_add(aug):
                            changed = True
                            stack.append(aug)
                        else:
                            rejected.add(aug)
            else:
                rejected.add(episode)
    return _finish(engine, rounds=rounds, candidate_count=candidate_count, t0=t0)
