"""Event-sequence databases: text ingestion, support counts, synthetic data.

Events are dense integer ids backed by a string token dictionary; every
algorithm in this package operates on the ids.  A database is immutable once
built, so derived arrays (flattened events, per-event occurrence lists,
supports) are computed lazily and shared freely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .codes import InvariantError, universal_integer_length


class CorpusError(ValueError):
    """Raised for malformed input text or invalid generator settings."""


@dataclass(frozen=True)
class Alphabet:
    """Token dictionary mapping event ids 0..size-1 to distinct strings."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) < 1:
            raise CorpusError("alphabet must contain at least one token")
        if len(set(self.tokens)) != len(self.tokens):
            raise CorpusError("alphabet tokens must be unique")

    @property
    def size(self) -> int:
        return len(self.tokens)

    def index(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}


@dataclass(frozen=True)
class Episode:
    """A serial episode: an ordered list of event ids (repeats allowed)."""

    events: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.events) < 1:
            raise ValueError("an episode has at least one event")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def is_singleton(self) -> bool:
        return len(self.events) == 1

    def tokens(self, alphabet: Alphabet) -> tuple[str, ...]:
        return tuple(alphabet.tokens[e] for e in self.events)


class SequenceDatabase:
    """Immutable store of integer-coded event sequences.

    Exposes the flattened event array together with sequence offsets; a
    position p is "global", `offsets[k] <= p < offsets[k+1]` places it in
    sequence k.  Windows never span sequence boundaries, which the global
    coordinates make cheap to enforce (positions of distinct sequences do
    not interleave).
    """

    def __init__(self, alphabet: Alphabet, sequences: Sequence[Sequence[int]]):
        if not sequences:
            raise CorpusError("empty database")
        seqs = tuple(tuple(int(e) for e in s) for s in sequences)
        for s in seqs:
            if not s:
                raise CorpusError("sequences must be non-empty")
            for e in s:
                if not 0 <= e < alphabet.size:
                    raise CorpusError(f"event id {e} outside alphabet")
        self.alphabet = alphabet
        self.sequences = seqs
        self.events = np.concatenate([np.asarray(s, dtype=np.int64) for s in seqs])
        self.offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
        np.cumsum([len(s) for s in seqs], out=self.offsets[1:])
        self.pos_seq = np.repeat(np.arange(len(seqs), dtype=np.int64),
                                 [len(s) for s in seqs])
        self.supports = np.bincount(self.events, minlength=alphabet.size).astype(np.int64)
        # occurrence lists per event, CSR over global positions
        order = np.argsort(self.events, kind="stable")
        self._occ_positions = order.astype(np.int64)
        self._occ_ptr = np.zeros(alphabet.size + 1, dtype=np.int64)
        np.cumsum(self.supports, out=self._occ_ptr[1:])
        self._window_cache: dict[Episode, tuple[np.ndarray, np.ndarray]] = {}
        self._header_bits: float | None = None
        self._st_lengths: np.ndarray | None = None

    @property
    def n_sequences(self) -> int:
        return len(self.sequences)

    @property
    def total_events(self) -> int:
        return int(self.offsets[-1])

    @property
    def header_bits(self) -> float:
        """Universal-code cost of the sequence count and every sequence length."""
        if self._header_bits is None:
            self._header_bits = universal_integer_length(self.n_sequences) + sum(
                universal_integer_length(len(s)) for s in self.sequences)
        return self._header_bits

    @property
    def st_lengths(self) -> np.ndarray:
        """Baseline per-event code lengths -log2(support/total), all singletons."""
        if self._st_lengths is None:
            if np.any(self.supports == 0):
                raise InvariantError("every alphabet event must occur at least once; "
                                     "prune unused tokens before costing")
            self._st_lengths = np.log2(float(self.total_events)) - np.log2(
                self.supports.astype(np.float64))
        return self._st_lengths

    def st_sum(self, episode: Episode) -> float:
        """Baseline cost of spelling out an episode's events."""
        st = self.st_lengths
        return float(sum(st[e] for e in episode.events))

    def occurrences(self, event: int) -> np.ndarray:
        """Sorted global positions where `event` occurs."""
        return self._occ_positions[self._occ_ptr[event]:self._occ_ptr[event + 1]]

    def support(self, event: int) -> int:
        if not 0 <= event < self.alphabet.size:
            raise CorpusError(f"event id {event} outside alphabet")
        return int(self.supports[event])

    def seq_of(self, pos: int) -> int:
        return int(self.pos_seq[pos])

    def to_local(self, pos: int) -> tuple[int, int]:
        """Translate a global position to (sequence_index, position)."""
        k = self.seq_of(pos)
        return k, int(pos - self.offsets[k])

    def episode_from_tokens(self, tokens: Iterable[str]) -> Episode:
        idx = self.alphabet.index()
        try:
            return Episode(tuple(idx[t] for t in tokens))
        except KeyError as exc:
            raise CorpusError(f"unknown token {exc.args[0]!r}") from exc

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SequenceDatabase):
            return NotImplemented
        return self.alphabet == other.alphabet and self.sequences == other.sequences

    def __repr__(self) -> str:
        return (f"SequenceDatabase(|alphabet|={self.alphabet.size}, "
                f"sequences={self.n_sequences}, events={self.total_events})")


def support(event: int, db: SequenceDatabase) -> int:
    """Number of occurrences of `event` across all sequences."""
    return db.support(event)


def load_database(text: str | TextIO, max_line_length: int = 10_000_000) -> SequenceDatabase:
    """Parse whitespace-tokenized text, one sequence per line.

    Tokens are interned in first-appearance order; blank lines are skipped.
    """
    if hasattr(text, "read"):
        text = text.read()
    tokens: list[str] = []
    index: dict[str, int] = {}
    sequences: list[list[int]] = []
    for lineno, line in enumerate(str(text).splitlines(), start=1):
        if len(line) > max_line_length:
            raise CorpusError(f"line {lineno} exceeds maximum length {max_line_length}")
        parts = line.split()
        if not parts:
            continue
        seq = []
        for tok in parts:
            if tok not in index:
                index[tok] = len(tokens)
                tokens.append(tok)
            seq.append(index[tok])
        sequences.append(seq)
    if not sequences:
        raise CorpusError("empty database")
    return SequenceDatabase(Alphabet(tuple(tokens)), sequences)


def write_database(db: SequenceDatabase, out: TextIO) -> None:
    """Inverse of load_database: one line of space-separated tokens per sequence."""
    toks = db.alphabet.tokens
    for seq in db.sequences:
        out.write(" ".join(toks[e] for e in seq))
        out.write("\n")


@dataclass(frozen=True)
class PlantSpec:
    """Settings for the synthetic generator (one sequence, planted episodes).

    The generator first fills every position with an event drawn uniformly
    i.i.d. from the alphabet, then plants `n_patterns` episodes of
    `pattern_length` fresh events each, `occurrences_per_pattern` times.
    Each consecutive pair of planted events independently skips one
    background position with probability `gap_probability`.  Later plants
    may overwrite earlier ones.
    """

    alphabet_size: int
    sequence_length: int
    n_patterns: int = 0
    pattern_length: int = 5
    occurrences_per_pattern: int = 10
    gap_probability: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.alphabet_size < 1 or self.sequence_length < 1:
            raise CorpusError("alphabet_size and sequence_length must be positive")
        if self.n_patterns < 0 or (self.n_patterns > 0 and self.pattern_length < 2):
            raise CorpusError("invalid pattern settings")
        if self.n_patterns * self.pattern_length > self.alphabet_size:
            raise CorpusError("planted patterns need disjoint event sets: "
                              "n_patterns * pattern_length must not exceed alphabet_size")
        if not 0.0 <= self.gap_probability <= 1.0:
            raise CorpusError("gap_probability must lie in [0, 1]")

    def to_json(self) -> dict:
        return {
            "alphabet_size": self.alphabet_size,
            "sequence_length": self.sequence_length,
            "n_patterns": self.n_patterns,
            "pattern_length": self.pattern_length,
            "occurrences_per_pattern": self.occurrences_per_pattern,
            "gap_probability": self.gap_probability,
            "seed": self.seed,
            "rng": "numpy PCG64",
        }


_MAX_PLANT_RETRIES = 1000


def generate_synthetic(spec: PlantSpec) -> tuple[SequenceDatabase, list[Episode]]:
    """Deterministically generate one sequence with planted serial episodes.

    Uses numpy's PCG64 stream seeded with `spec.seed`, so a spec reproduces
    bit-identically across runs.  Events that end up with support 0 (possible
    for large alphabets) are pruned from the dictionary, since downstream
    code lengths require every alphabet event to occur.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.sequence_length
    seq = rng.integers(0, spec.alphabet_size, size=n, dtype=np.int64)

    # planted patterns use fresh, pairwise-disjoint events so recovery is
    # unambiguous
    pattern_events = rng.choice(spec.alphabet_size,
                                size=spec.n_patterns * spec.pattern_length,
                                replace=False) if spec.n_patterns else np.empty(0, np.int64)
    planted = [Episode(tuple(int(e) for e in
                             pattern_events[i * spec.pattern_length:(i + 1) * spec.pattern_length]))
               for i in range(spec.n_patterns)]

    for ep in planted:
        for _ in range(spec.occurrences_per_pattern):
            gaps = rng.random(spec.pattern_length - 1) < spec.gap_probability
            span = spec.pattern_length + int(gaps.sum())
            for attempt in range(_MAX_PLANT_RETRIES):
                start = int(rng.integers(0, n))
                if start + span <= n:
                    break
            else:
                raise CorpusError("could not place a planted occurrence "
                                  f"(length {span} in sequence of {n})")
            pos = start
            for j, e in enumerate(ep.events):
                seq[pos] = e
                if j < spec.pattern_length - 1:
                    pos += 2 if gaps[j] else 1

    used = np.unique(seq)
    remap = np.full(spec.alphabet_size, -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    seq = remap[seq]
    tokens = tuple(f"e{int(e)}" for e in used)
    planted = [Episode(tuple(int(remap[e]) for e in ep.events)) for ep in planted]
    db = SequenceDatabase(Alphabet(tokens), [seq.tolist()])
    return db, planted


def write_sidecar(spec: PlantSpec, planted: list[Episode], db: SequenceDatabase,
                  out: TextIO) -> None:
    """Record the generator settings and planted patterns next to the data."""
    record = spec.to_json()
    record["planted_patterns"] = [list(ep.tokens(db.alphabet)) for ep in planted]
    record["alphabet_used"] = db.alphabet.size
    json.dump(record, out, indent=2)
    out.write("\n")
