"""Summarising event-sequence databases with small sets of serial episodes.

The model is a code table: every singleton event plus a chosen set of
episodes, scored by the total encoded length of table and data.  The package
provides the exact bit accounting, an optimal-alignment dynamic program, a
candidate miner, two model-search strategies, a seeded synthetic generator,
and a lossless encode/decode verifier, all tied together by the `seqsum`
command-line tool.
"""

from .codes import (InvariantError, SENTINEL_BITS, composition_length,
                    universal_integer_length)
from .corpus import (Alphabet, CorpusError, Episode, PlantSpec,
                     SequenceDatabase, generate_synthetic, load_database,
                     support, write_database)
from .cover import (Alignment, CoverRecorder, CoverResult, Window, align,
                    find_minimal_windows, sqs_cover, stats_from_alignment)
from .encoding import (CodeLengths, CodeTable, EncodedStreams, StandardTable,
                       UsageStats, baseline_stats, code_lengths, data_cost,
                       decode_database, encode_database, model_cost,
                       standard_cost, total_cost, window_gain)
from .miner import MinerConfig, episode_support, mine_frequent_episodes
from .search import (CandidateScore, JoinCounters, SearchReport, diff_score,
                     estimate, prune, rank_patterns, sqs_candidates, sqs_search)

__all__ = [
    "Alignment", "Alphabet", "CandidateScore", "CodeLengths", "CodeTable",
    "CorpusError", "CoverRecorder", "CoverResult", "EncodedStreams", "Episode",
    "InvariantError", "JoinCounters", "MinerConfig", "PlantSpec",
    "SENTINEL_BITS", "SearchReport", "SequenceDatabase", "StandardTable",
    "UsageStats", "Window", "align", "baseline_stats", "code_lengths",
    "composition_length", "data_cost", "decode_database", "diff_score",
    "encode_database", "episode_support", "estimate", "find_minimal_windows",
    "generate_synthetic", "load_database", "mine_frequent_episodes",
    "model_cost", "prune", "rank_patterns", "sqs_candidates", "sqs_cover",
    "sqs_search", "standard_cost", "stats_from_alignment", "support",
    "total_cost", "universal_integer_length", "window_gain", "write_database",
]
