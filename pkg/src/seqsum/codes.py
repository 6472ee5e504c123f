"""Scalar code-length primitives shared across the package.

All lengths are in bits (base-2 logs throughout), computed as real numbers;
no actual code words are ever materialised.
"""

from __future__ import annotations

import math

import numpy as np

# normaliser of the universal code for positive integers, chosen so the
# implied code satisfies the Kraft inequality
C0 = 2.865064
LOG2_C0 = math.log2(C0)

# stand-in for the undefined length of a zero-count code: large but finite so
# comparisons stay totally ordered; it never enters a stream cost because a
# zero-count code occurs zero times
SENTINEL_BITS = 1e12

# absolute tolerance for cost comparisons
COST_EPS = 1e-9


class InvariantError(RuntimeError):
    """A contract violation or broken internal invariant."""


def universal_integer_length(n: int) -> float:
    """Length in bits of the universal code for an integer n >= 1.

    log*(n) + log2(c0), where log* sums log2(n), log2(log2(n)), ... keeping
    only the positive terms.
    """
    if n < 1:
        raise InvariantError(f"universal code needs n >= 1, got {n}")
    total = LOG2_C0
    x = math.log2(n)
    while x > 0.0:
        total += x
        x = math.log2(x)
    return total


def composition_length(m: int, n: int) -> float:
    """Bits to index one composition of m into n non-zero parts: log2 C(m-1, n-1).

    Defined as 0 for m == n == 0.  Uses log-gamma so large m stay exact
    enough without big binomials.
    """
    if n > m or m < 0 or n < 0:
        raise InvariantError(f"composition needs 0 <= n <= m, got m={m} n={n}")
    if m == 0:
        return 0.0
    if n == 0:
        raise InvariantError("no composition of a positive total into 0 parts")
    return (math.lgamma(m) - math.lgamma(n) - math.lgamma(m - n + 1)) / math.log(2.0)


def xlog2x(counts: np.ndarray) -> np.ndarray:
    """Elementwise x * log2(x) with the 0 log 0 = 0 convention."""
    counts = np.asarray(counts, dtype=np.float64)
    out = np.zeros_like(counts)
    nz = counts > 0
    out[nz] = counts[nz] * np.log2(counts[nz])
    return out
