"""Frequent serial-episode candidate generation.

Support is counted as the maximum number of pairwise-disjoint minimal
windows not longer than `max_window` positions.  That count is anti-monotone
under episode extension (each window of an extension contains a shorter
window of the prefix), so a prefix-growth enumeration with sigma-pruning is
complete.  Greedy left-to-right selection over the sorted minimal windows is
exact for the disjoint count: minimal windows are never nested, so sorting
by start also sorts by end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._fast import disjoint_count, extend_windows
from .codes import InvariantError
from .corpus import Episode, SequenceDatabase
from .cover import minimal_window_arrays


@dataclass(frozen=True)
class MinerConfig:
    sigma: int
    max_window: int = 15
    max_pattern_length: int | None = None

    def __post_init__(self) -> None:
        if self.sigma < 1:
            raise InvariantError("sigma must be at least 1")
        if self.max_window < 2:
            raise InvariantError("max_window must be at least 2")
        if self.max_pattern_length is not None and self.max_pattern_length < 2:
            raise InvariantError("max_pattern_length must be at least 2")


def episode_support(db: SequenceDatabase, episode: Episode, max_window: int) -> int:
    """Disjoint minimal-window support of one episode."""
    if episode.is_singleton:
        return db.support(episode.events[0])
    ws, we = minimal_window_arrays(db, episode)
    return int(disjoint_count(ws, we, max_window))


def _candidate_events(db: SequenceDatabase, ws: np.ndarray, we: np.ndarray,
                      max_window: int) -> list[int]:
    """Events that can extend some window to span at most max_window."""
    events = db.events
    offsets = db.offsets
    pos_seq = db.pos_seq
    seen: set[int] = set()
    for s, e in zip(ws.tolist(), we.tolist()):
        if e - s + 1 >= max_window:
            continue
        hi = min(s + max_window, int(offsets[pos_seq[s] + 1]))
        for p in range(e + 1, hi):
            seen.add(int(events[p]))
    return sorted(seen)


def mine_frequent_episodes(db: SequenceDatabase, config: MinerConfig
                           ) -> list[tuple[Episode, int]]:
    """All non-singleton serial episodes with support >= sigma.

    Returned sorted by support descending (ties: shorter first, then by
    event ids).  Singletons are excluded; code tables always carry them.
    """
    results: list[tuple[Episode, int]] = []
    max_len = config.max_pattern_length or 0

    def grow(events: tuple[int, ...], ws: np.ndarray, we: np.ndarray) -> None:
        for ev in _candidate_events(db, ws, we, config.max_window):
            ws2, we2 = extend_windows(ws, we, db.occurrences(ev), db.pos_seq)
            supp = int(disjoint_count(ws2, we2, config.max_window))
            if supp < config.sigma:
                continue
            child = events + (ev,)
            results.append((Episode(child), supp))
            if not max_len or len(child) < max_len:
                grow(child, ws2, we2)

    for e in range(db.alphabet.size):
        if db.support(e) < config.sigma:
            continue
        occ = db.occurrences(e)
        grow((e,), occ, occ)

    results.sort(key=lambda item: (-item[1], len(item[0]), item[0].events))
    return results
