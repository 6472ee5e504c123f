"""Numba kernels for the hot inner loops.

Everything here is plain array code; stripping the @njit decorators leaves
valid (just slower) Python, which keeps the kernels debuggable.  Positions
are global indices into the flattened event array; sequences occupy disjoint
position ranges, so "same sequence" checks reduce to comparing seq ids and
interval disjointness never crosses a boundary by construction.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_LOG2_C0 = math.log2(2.865064)
_LN2 = math.log(2.0)


@njit(cache=True)
def ln_univ(n: int) -> float:
    """Universal code length for an integer n >= 1 (see codes.py twin)."""
    total = _LOG2_C0
    x = math.log2(n)
    while x > 0.0:
        total += x
        x = math.log2(x)
    return total


@njit(cache=True)
def lu_comp(m: int, n: int) -> float:
    """log2 C(m-1, n-1); 0 when m == n == 0 (see codes.py twin)."""
    if m == 0:
        return 0.0
    return (math.lgamma(m) - math.lgamma(n) - math.lgamma(m - n + 1)) / _LN2


@njit(cache=True)
def flog(x: float) -> float:
    """x * log2(x) with f(0) = 0."""
    if x <= 0.0:
        return 0.0
    return x * math.log2(x)


@njit(cache=True)
def gapstream_bits(gaps: float, fills: float) -> float:
    """Cost of one entry's gap stream: binary-entropy form over counts."""
    return flog(gaps + fills) - flog(gaps) - flog(fills)


@njit(cache=True)
def extend_windows(xs: np.ndarray, xe: np.ndarray, occ: np.ndarray,
                   pos_seq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minimal windows of episode X extended by one event.

    Given the minimal windows (xs, xe) of X sorted by position and the
    sorted occurrence positions of the added event, a candidate window pairs
    an occurrence p with the latest X-window ending before p; it survives
    when its start strictly exceeds the previous candidate's start.
    """
    out_s = np.empty(occ.size, np.int64)
    out_e = np.empty(occ.size, np.int64)
    m = 0
    i = 0
    last_start = np.int64(-1)
    for t in range(occ.size):
        p = occ[t]
        while i < xs.size and xe[i] < p:
            i += 1
        if i == 0:
            continue
        a = xs[i - 1]
        if pos_seq[a] != pos_seq[p]:
            continue
        if a > last_start:
            out_s[m] = a
            out_e[m] = p
            m += 1
            last_start = a
    return out_s[:m], out_e[:m]


@njit(cache=True)
def disjoint_count(ws: np.ndarray, we: np.ndarray, max_window: int) -> int:
    """Greedy maximum number of pairwise-disjoint windows with span <= max_window."""
    count = 0
    last_end = np.int64(-1)
    for i in range(ws.size):
        if we[i] - ws[i] + 1 > max_window:
            continue
        if ws[i] > last_end:
            count += 1
            last_end = we[i]
    return count


@njit(cache=True)
def align_select(w_start: np.ndarray, w_end: np.ndarray,
                 gains: np.ndarray) -> tuple[np.ndarray, float]:
    """Disjoint window subset with maximal total gain (backward DP).

    Windows must be sorted by start position.  A window is taken only on a
    strict improvement, so zero-gain windows are never selected and ties
    break toward later windows.  Returns (selected indices ascending, gain).
    """
    n = w_start.size
    sel = np.empty(n, np.int64)
    if n == 0:
        return sel[:0], 0.0
    nxt = np.empty(n, np.int64)
    for i in range(n):
        nxt[i] = np.searchsorted(w_start, w_end[i], side="right")
    o = np.zeros(n + 1)
    opt = np.full(n + 1, -1, np.int64)
    for i in range(n - 1, -1, -1):
        c = o[nxt[i]]
        if gains[i] + c > o[i + 1]:
            o[i] = gains[i] + c
            opt[i] = i
        else:
            o[i] = o[i + 1]
            opt[i] = opt[i + 1]
    k = 0
    j = opt[0]
    while j >= 0:
        sel[k] = j
        k += 1
        nj = nxt[j]
        j = opt[nj] if nj < n else np.int64(-1)
    return sel[:k], o[0]


@njit(cache=True)
def diff_join(p_len: int, q_len: int, same_pq: bool,
              u_p: int, u_q: int, u_r: int,
              g_p: int, g_q: int, g_r: int,
              total_usage: int, n_pat: int, usage_pat: int,
              st_p: float, st_q: float,
              n: int, gaps_v: int, gaps_w: int, gaps_u: int) -> float:
    """Exact change in total encoded bits when n windows of P and Q merge into PQ.

    Usage of P and Q drops by n each (by 2n when P = Q), usage of R = PQ
    rises by n, total usage drops by n; gap counts shift by the given
    totals.  Only the six affected code-table terms are re-evaluated, with
    entry insertion for R and removal of P or Q at usage zero.  Returns
    bits(after) - bits(before); negative means the join helps.
    """
    if n == 0:
        return 0.0
    if same_pq:
        up2 = u_p - 2 * n
        uq2 = up2
    else:
        up2 = u_p - n
        uq2 = u_q - n
    ur2 = u_r + n
    tot2 = total_usage - n
    r_len = p_len + q_len

    # pattern stream
    d = flog(total_usage) - flog(tot2)
    d += flog(up2) - flog(u_p)
    if not same_pq:
        d += flog(uq2) - flog(u_q)
    d += flog(ur2) - flog(u_r)
    d = -d  # accumulated as sum of f-terms of L(C_p) = U log U - sum f

    # gap stream
    gr2 = g_r + gaps_u
    d += gapstream_bits(gr2, ur2 * (r_len - 1)) - gapstream_bits(g_r, u_r * (r_len - 1))
    gp2 = g_p - gaps_v - (gaps_w if same_pq else 0)
    if p_len > 1:
        d += gapstream_bits(gp2, up2 * (p_len - 1)) - gapstream_bits(g_p, u_p * (p_len - 1))
    gq2 = g_q - gaps_w
    if q_len > 1 and not same_pq:
        d += gapstream_bits(gq2, uq2 * (q_len - 1)) - gapstream_bits(g_q, u_q * (q_len - 1))

    # code table
    np_new = n_pat
    upat_new = usage_pat + n
    if u_r == 0:
        np_new += 1
        d += ln_univ(r_len) + ln_univ(gr2 + 1) + st_p + st_q
    else:
        d += ln_univ(gr2 + 1) - ln_univ(g_r + 1)
    if p_len > 1:
        upat_new -= 2 * n if same_pq else n
        if up2 == 0:
            np_new -= 1
            d -= ln_univ(p_len) + ln_univ(g_p + 1) + st_p
        else:
            d += ln_univ(gp2 + 1) - ln_univ(g_p + 1)
    if q_len > 1 and not same_pq:
        upat_new -= n
        if uq2 == 0:
            np_new -= 1
            d -= ln_univ(q_len) + ln_univ(g_q + 1) + st_q
        else:
            d += ln_univ(gq2 + 1) - ln_univ(g_q + 1)
    d += ln_univ(np_new + 1) - ln_univ(n_pat + 1)
    d += ln_univ(upat_new + 1) - ln_univ(usage_pat + 1)
    d += lu_comp(upat_new, np_new) - lu_comp(usage_pat, n_pat)
    return d


@njit(cache=True)
def estimate_scan(p_entry: int,
                  it_start: np.ndarray, it_end: np.ndarray, it_entry: np.ndarray,
                  it_gain: np.ndarray, it_seq: np.ndarray, prev_same: np.ndarray,
                  occ: np.ndarray,
                  ent_len: np.ndarray, ent_usage: np.ndarray, ent_gaps: np.ndarray,
                  ent_stsum: np.ndarray,
                  r_usage: np.ndarray, r_gaps: np.ndarray,
                  total_usage: int, n_pat: int, usage_pat: int,
                  max_len: int) -> np.ndarray:
    """One pass of extension scoring for entry P over the current encoding.

    From every occurrence item of P a scan walks the following encoding
    items; all scans are interleaved so candidate windows are visited
    shortest first.  The first item of entry X after an occurrence yields a
    join instance for the extension PX (later ones cannot start a minimal
    window); its running score is the constant-time join diff over the
    accumulated counters plus the scan's deletion penalty s, which grows by
    gain(w) for every pattern window the scan walks past.  A scan stops at
    the next occurrence of P or at the sequence end; consumed instances are
    marked so P.P joins never reuse them.  Returns the best (most negative)
    running score per candidate entry; 0 means no improving join was seen.
    """
    n_entries = ent_len.size
    n_items = it_start.size
    best = np.zeros(n_entries)
    cnt_n = np.zeros(n_entries, np.int64)
    cnt_gv = np.zeros(n_entries, np.int64)
    cnt_gw = np.zeros(n_entries, np.int64)
    cnt_gu = np.zeros(n_entries, np.int64)
    used = np.zeros(n_items, np.uint8)
    n_occ = occ.size
    if n_occ == 0:
        return best

    t_cur = np.full(n_occ, -1, np.int64)
    t_s = np.zeros(n_occ)
    head = np.full(max_len + 2, -1, np.int64)
    nxt_t = np.full(n_occ, -1, np.int64)
    active = 0
    p_len = ent_len[p_entry]
    u_p = ent_usage[p_entry]
    g_p = ent_gaps[p_entry]
    st_p = ent_stsum[p_entry]

    for si in range(n_occ):
        v = occ[si]
        w = v + 1
        if w < n_items and it_seq[w] == it_seq[v]:
            t_cur[si] = w
            span = it_end[w] - it_start[v]
            nxt_t[si] = head[span]
            head[span] = si
            active += 1

    cur = 0
    while active > 0:
        while head[cur] == -1:
            cur += 1
        si = head[cur]
        head[cur] = nxt_t[si]
        v = occ[si]
        w = t_cur[si]
        x = it_entry[w]
        x_len = ent_len[x]
        if x == p_entry:
            active -= 1
            if used[v] == 0 and used[w] == 0 and prev_same[w] <= v:
                gv = (it_end[v] - it_start[v] + 1) - p_len
                gw = (it_end[w] - it_start[w] + 1) - p_len
                gu = (it_end[w] - it_start[v] + 1) - 2 * p_len
                cnt_n[x] += 1
                cnt_gv[x] += gv
                cnt_gw[x] += gw
                cnt_gu[x] += gu
                sc = diff_join(p_len, p_len, True,
                               u_p, u_p, r_usage[x], g_p, g_p, r_gaps[x],
                               total_usage, n_pat, usage_pat, st_p, st_p,
                               cnt_n[x], cnt_gv[x], cnt_gw[x], cnt_gu[x]) + t_s[si]
                if sc < best[x]:
                    best[x] = sc
                used[v] = 1
                used[w] = 1
            continue
        if prev_same[w] <= v:
            gv = (it_end[v] - it_start[v] + 1) - p_len
            gw = (it_end[w] - it_start[w] + 1) - x_len
            gu = (it_end[w] - it_start[v] + 1) - p_len - x_len
            cnt_n[x] += 1
            cnt_gv[x] += gv
            cnt_gw[x] += gw
            cnt_gu[x] += gu
            sc = diff_join(p_len, x_len, False,
                           u_p, ent_usage[x], r_usage[x], g_p, ent_gaps[x], r_gaps[x],
                           total_usage, n_pat, usage_pat, st_p, ent_stsum[x],
                           cnt_n[x], cnt_gv[x], cnt_gw[x], cnt_gu[x]) + t_s[si]
            if sc < best[x]:
                best[x] = sc
        if x_len > 1:
            t_s[si] += it_gain[w]
        w2 = w + 1
        if w2 >= n_items or it_seq[w2] != it_seq[w]:
            active -= 1
        else:
            t_cur[si] = w2
            span = it_end[w2] - it_start[v]
            nxt_t[si] = head[span]
            head[span] = si
    return best
