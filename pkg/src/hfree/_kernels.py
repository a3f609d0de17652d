"""Compiled inner loops for the process engine and extension counting.

All graph state lives in packed uint64 bit matrices (one row of n bits per
vertex).  The anchored backtracking searches are driven by flattened
"plans" built in Python: per search, a vertex placement order plus, for
each position, the list of earlier positions it must be adjacent to.
"""
from __future__ import annotations

import numpy as np
from numba import njit, uint64, int64, int32

U1 = np.uint64(1)
M1 = np.uint64(0x5555555555555555)
M2 = np.uint64(0x3333333333333333)
M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
H01 = np.uint64(0x0101010101010101)


@njit(cache=True, inline="always")
def _popcnt(x):
    x = x - ((x >> uint64(1)) & M1)
    x = (x & M2) + ((x >> uint64(2)) & M2)
    x = (x + (x >> uint64(4))) & M4
    return int64((x * H01) >> uint64(56))


@njit(cache=True, inline="always")
def _ctz(x):
    # x != 0
    return _popcnt((x & (uint64(0) - x)) - uint64(1))


@njit(cache=True, inline="always")
def _get_bit(row, j):
    return (row[j >> 6] >> uint64(j & 63)) & uint64(1)


@njit(cache=True, inline="always")
def _set_bit(row, j):
    row[j >> 6] |= uint64(1) << uint64(j & 63)


@njit(cache=True, inline="always")
def _clear_bit(row, j):
    row[j >> 6] &= ~(uint64(1) << uint64(j & 63))


@njit(cache=True, inline="always")
def _next_bit(row, nw, start):
    """Smallest set bit index >= start, or -1."""
    if start < 0:
        start = 0
    w = start >> 6
    if w >= nw:
        return int64(-1)
    chunk = row[w] >> uint64(start & 63)
    if chunk != uint64(0):
        return int64(start + _ctz(chunk))
    w += 1
    while w < nw:
        if row[w] != uint64(0):
            return int64((w << 6) + _ctz(row[w]))
        w += 1
    return int64(-1)


# ---------------------------------------------------------------------------
# RNG: splitmix64, state carried in a 1-element uint64 array
# ---------------------------------------------------------------------------

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _next_u64(rng):
    rng[0] = rng[0] + GOLDEN
    z = rng[0]
    z = (z ^ (z >> uint64(30))) * MIX1
    z = (z ^ (z >> uint64(27))) * MIX2
    return z ^ (z >> uint64(31))


@njit(cache=True, inline="always")
def _randbelow(rng, m):
    return int64(_next_u64(rng) % uint64(m))


# ---------------------------------------------------------------------------
# Anchored closure search
# ---------------------------------------------------------------------------

@njit(cache=True)
def closure_scan(edge, closed, n, nw, u, v,
                 cnt, pos, cpos, dpos, cdready, nv, bufx, bufy):
    """Record candidate closed pairs for the pair (u, v).

    For each search plan r, enumerates injective f with f[0]=u, f[1]=v and
    every plan edge present, pruning branches whose (c, d) image is already
    an edge.  Pairs (f[cpos], f[dpos]) land in bufx/bufy, duplicates
    possible; plans put the anchored endpoint at cpos when one exists, so
    downstream row lookups hit the cached anchor rows.
    Returns the number of pairs, or -1 on buffer overflow.
    """
    nrep = cnt.shape[0]
    f = np.empty(nv, np.int64)
    cand = np.empty((nv, nw), np.uint64)
    cur = np.empty(nv, np.int64)
    nout = 0
    for r in range(nrep):
        f[0] = u
        f[1] = v
        depth = 2
        # candidates for position 2
        k = depth
        nc = cnt[r, k]
        for w in range(nw):
            cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
        tail = n & 63
        if tail != 0:
            cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
        for j in range(nc):
            prow = edge[f[pos[r, k, j]]]
            for w in range(nw):
                cand[k, w] &= prow[w]
        _clear_bit(cand[k], u)
        _clear_bit(cand[k], v)
        cur[depth] = -1
        last = nv - 1
        cdr = cdready[r]
        while depth >= 2:
            if depth == last:
                # consume the whole candidate row of the final position
                for w in range(nw):
                    word = cand[last, w]
                    while word != uint64(0):
                        f[last] = int64((w << 6) + _ctz(word))
                        word &= word - uint64(1)
                        x = f[cpos[r]]
                        y = f[dpos[r]]
                        if cdr == last and _get_bit(edge[x], y) == uint64(1):
                            continue
                        if nout >= bufx.shape[0]:
                            return int64(-1)
                        bufx[nout] = int32(x)
                        bufy[nout] = int32(y)
                        nout += 1
                depth -= 1
                continue
            nxt = _next_bit(cand[depth], nw, cur[depth] + 1)
            if nxt < 0:
                depth -= 1
                continue
            cur[depth] = nxt
            f[depth] = nxt
            if depth == cdr:
                x = f[cpos[r]]
                y = f[dpos[r]]
                if _get_bit(edge[x], y) == uint64(1):
                    continue
            depth += 1
            k = depth
            nc = cnt[r, k]
            for w in range(nw):
                cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
            if tail != 0:
                cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
            for j in range(nc):
                prow = edge[f[pos[r, k, j]]]
                for w in range(nw):
                    cand[k, w] &= prow[w]
            for j in range(depth):
                _clear_bit(cand[k], f[j])
            cur[depth] = -1
    return int64(nout)


@njit(cache=True)
def closure_formula_count(edge, closed, n, nw, u, v,
                          cnt, pos, cpos, dpos, cdready, nv):
    """Total number of embeddings over all search plans with the plan edges
    present and the (c, d) image an open pair.  One count per injective f."""
    nrep = cnt.shape[0]
    f = np.empty(nv, np.int64)
    cand = np.empty((nv, nw), np.uint64)
    cur = np.empty(nv, np.int64)
    total = int64(0)
    tail = n & 63
    for r in range(nrep):
        f[0] = u
        f[1] = v
        depth = 2
        k = depth
        nc = cnt[r, k]
        for w in range(nw):
            cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
        if tail != 0:
            cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
        for j in range(nc):
            prow = edge[f[pos[r, k, j]]]
            for w in range(nw):
                cand[k, w] &= prow[w]
        _clear_bit(cand[k], u)
        _clear_bit(cand[k], v)
        cur[depth] = -1
        while depth >= 2:
            nxt = _next_bit(cand[depth], nw, cur[depth] + 1)
            if nxt < 0:
                depth -= 1
                continue
            cur[depth] = nxt
            f[depth] = nxt
            if depth == cdready[r]:
                x = f[cpos[r]]
                y = f[dpos[r]]
                if _get_bit(edge[x], y) == uint64(1) or _get_bit(closed[x], y) == uint64(1):
                    continue
            if depth == nv - 1:
                total += 1
            else:
                depth += 1
                k = depth
                nc = cnt[r, k]
                for w in range(nw):
                    cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
                if tail != 0:
                    cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
                for j in range(nc):
                    prow = edge[f[pos[r, k, j]]]
                    for w in range(nw):
                        cand[k, w] &= prow[w]
                for j in range(depth):
                    _clear_bit(cand[k], f[j])
                cur[depth] = -1
    return total


# ---------------------------------------------------------------------------
# Anchored full-H containment (status oracle)
# ---------------------------------------------------------------------------

@njit(cache=True)
def anchored_contains(edge, n, nw, x, y, cnt, pos, nv):
    """True iff some plan embeds with f[0]=x, f[1]=y and all plan edges
    present in `edge` (the anchor pair itself is never a plan edge)."""
    nrep = cnt.shape[0]
    f = np.empty(nv, np.int64)
    cand = np.empty((nv, nw), np.uint64)
    cur = np.empty(nv, np.int64)
    tail = n & 63
    for r in range(nrep):
        f[0] = x
        f[1] = y
        depth = 2
        k = depth
        for w in range(nw):
            cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
        if tail != 0:
            cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
        for j in range(cnt[r, k]):
            prow = edge[f[pos[r, k, j]]]
            for w in range(nw):
                cand[k, w] &= prow[w]
        _clear_bit(cand[k], x)
        _clear_bit(cand[k], y)
        cur[depth] = -1
        while depth >= 2:
            nxt = _next_bit(cand[depth], nw, cur[depth] + 1)
            if nxt < 0:
                depth -= 1
                continue
            cur[depth] = nxt
            f[depth] = nxt
            if depth == nv - 1:
                return True
            depth += 1
            k = depth
            for w in range(nw):
                cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
            if tail != 0:
                cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
            for j in range(cnt[r, k]):
                prow = edge[f[pos[r, k, j]]]
                for w in range(nw):
                    cand[k, w] &= prow[w]
            for j in range(depth):
                _clear_bit(cand[k], f[j])
            cur[depth] = -1
    return False


@njit(cache=True)
def oracle_closed_matrix(edge, n, nw, cnt, pos, nv):
    """Recompute the closed-pair bit matrix from scratch: a non-edge (x, y)
    is closed iff the edge graph plus xy hosts a copy of the pattern with
    some pattern edge on xy."""
    out = np.zeros((n, nw), np.uint64)
    for x in range(n):
        for y in range(x + 1, n):
            if _get_bit(edge[x], y) == uint64(1):
                continue
            if anchored_contains(edge, n, nw, x, y, cnt, pos, nv):
                _set_bit(out[x], y)
                _set_bit(out[y], x)
    return out


@njit(cache=True)
def graph_contains(edge, n, nw, cnt, pos, nv):
    """True iff the edge graph contains the pattern (checked by anchoring
    every existing edge)."""
    for x in range(n):
        row = edge[x]
        y = _next_bit(row, nw, x + 1)
        while y >= 0:
            if anchored_contains(edge, n, nw, x, y, cnt, pos, nv):
                return True
            y = _next_bit(row, nw, y + 1)
    return False


# ---------------------------------------------------------------------------
# Extension counting
# ---------------------------------------------------------------------------

@njit(cache=True)
def count_maps(edge, closed, n, nw, anchors,
               ecnt, epos, ocnt, opos, nv):
    """Count injective maps extending the anchor images, with plan edge
    constraints mapped into edges and plan open constraints into open pairs.

    Positions 0..len(anchors)-1 are fixed to the anchor images; constraint
    lists reference earlier positions.  The last position is counted by
    popcount instead of iteration.
    """
    nanch = anchors.shape[0]
    if nv == nanch:
        return int64(1)
    f = np.empty(nv, np.int64)
    for a in range(nanch):
        f[a] = anchors[a]
    cand = np.empty((nv, nw), np.uint64)
    cur = np.empty(nv, np.int64)
    tail = n & 63
    total = int64(0)
    depth = nanch

    # candidate mask builder for a given depth
    def _fill(k):
        for w in range(nw):
            cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
        if tail != 0:
            cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
        for j in range(ecnt[k]):
            prow = edge[f[epos[k, j]]]
            for w in range(nw):
                cand[k, w] &= prow[w]
        for j in range(ocnt[k]):
            pv = f[opos[k, j]]
            erow = edge[pv]
            crow = closed[pv]
            for w in range(nw):
                cand[k, w] &= ~(erow[w] | crow[w])
            if tail != 0:
                cand[k, nw - 1] &= (uint64(1) << uint64(tail)) - uint64(1)
        for j in range(k):
            _clear_bit(cand[k], f[j])

    _fill(depth)
    if nv - nanch == 1:
        s = int64(0)
        for w in range(nw):
            s += _popcnt(cand[depth, w])
        return s
    cur[depth] = -1
    while depth >= nanch:
        nxt = _next_bit(cand[depth], nw, cur[depth] + 1)
        if nxt < 0:
            depth -= 1
            continue
        cur[depth] = nxt
        f[depth] = nxt
        if depth == nv - 2:
            _fill(nv - 1)
            for w in range(nw):
                total += _popcnt(cand[nv - 1, w])
        else:
            depth += 1
            _fill(depth)
            cur[depth] = -1
    return total


@njit(cache=True)
def enumerate_maps(edge, closed, n, nw, anchors,
                   ecnt, epos, ocnt, opos, nv, out):
    """Like count_maps but materializes each map into `out` (rows of length
    nv).  Returns the number of maps, or -1 if out is too small."""
    nanch = anchors.shape[0]
    f = np.empty(nv, np.int64)
    for a in range(nanch):
        f[a] = anchors[a]
    if nv == nanch:
        if out.shape[0] < 1:
            return int64(-1)
        for j in range(nv):
            out[0, j] = f[j]
        return int64(1)
    cand = np.empty((nv, nw), np.uint64)
    cur = np.empty(nv, np.int64)
    tail = n & 63
    nout = int64(0)
    depth = nanch

    def _fill(k):
        for w in range(nw):
            cand[k, w] = uint64(0xFFFFFFFFFFFFFFFF)
        if tail != 0:
            cand[k, nw - 1] = (uint64(1) << uint64(tail)) - uint64(1)
        for j in range(ecnt[k]):
            prow = edge[f[epos[k, j]]]
            for w in range(nw):
                cand[k, w] &= prow[w]
        for j in range(ocnt[k]):
            pv = f[opos[k, j]]
            erow = edge[pv]
            crow = closed[pv]
            for w in range(nw):
                cand[k, w] &= ~(erow[w] | crow[w])
            if tail != 0:
                cand[k, nw - 1] &= (uint64(1) << uint64(tail)) - uint64(1)
        for j in range(k):
            _clear_bit(cand[k], f[j])

    _fill(depth)
    cur[depth] = -1
    while depth >= nanch:
        nxt = _next_bit(cand[depth], nw, cur[depth] + 1)
        if nxt < 0:
            depth -= 1
            continue
        cur[depth] = nxt
        f[depth] = nxt
        if depth == nv - 1:
            if nout >= out.shape[0]:
                return int64(-1)
            for j in range(nv):
                out[nout, j] = f[j]
            nout += 1
        else:
            depth += 1
            _fill(depth)
            cur[depth] = -1
    return nout


# ---------------------------------------------------------------------------
# Process run loop
# ---------------------------------------------------------------------------

# meta layout
META_STEP = 0        # i, number of edges
META_OPEN = 1        # open unordered pair count
META_MODE = 2        # 0 rejection, 1 explicit list
META_LIST_LEN = 3
META_STATUS = 4      # 0 chunk done, 1 terminated, 2 wants explicit list, 3 overflow
META_FALLBACK = 5    # 1 if rejection may request the explicit list

STATUS_DONE = 0
STATUS_TERMINATED = 1
STATUS_WANT_LIST = 2
STATUS_OVERFLOW = 3


@njit(cache=True)
def build_open_list(edge, closed, n, nw):
    """Codes x*n+y (x<y) of all currently open pairs."""
    cnt = 0
    for x in range(n):
        erow = edge[x]
        crow = closed[x]
        for w in range(nw):
            blocked = erow[w] | crow[w]
            base = w << 6
            hi = n - base
            if hi <= 0:
                break
            mask = uint64(0xFFFFFFFFFFFFFFFF)
            if hi < 64:
                mask = (uint64(1) << uint64(hi)) - uint64(1)
            if x >= base:
                lo = x - base + 1
                if lo >= 64:
                    mask = uint64(0)
                else:
                    mask &= ~((uint64(1) << uint64(lo)) - uint64(1))
            cnt += _popcnt(~blocked & mask)
    out = np.empty(cnt, np.int64)
    k = 0
    for x in range(n):
        erow = edge[x]
        crow = closed[x]
        for y in range(x + 1, n):
            if _get_bit(erow, y) == uint64(0) and _get_bit(crow, y) == uint64(0):
                out[k] = x * n + y
                k += 1
    return out


@njit(cache=True)
def run_chunk(edge, closed, n, nw, rng, meta,
              cnt, pos, cpos, dpos, cdready, nv,
              max_steps, out_u, out_v, out_newly, out_open,
              open_list, use_imask, imask, out_iclosed, bufx, bufy):
    """Advance the process by up to max_steps steps; see META_* for the
    status protocol.  Per-step records land in the out arrays."""
    total_pairs = n * (n - 1) // 2
    steps_done = 0
    while steps_done < max_steps:
        if meta[META_OPEN] == 0:
            meta[META_STATUS] = STATUS_TERMINATED
            return steps_done
        if (meta[META_MODE] == 0 and meta[META_FALLBACK] == 1
                and meta[META_OPEN] * 100 < total_pairs):
            meta[META_STATUS] = STATUS_WANT_LIST
            return steps_done
        # --- sample a uniform open pair ---
        u = -1
        v = -1
        if meta[META_MODE] == 0:
            while True:
                a = _randbelow(rng, n)
                b = _randbelow(rng, n)
                if a == b:
                    continue
                if _get_bit(edge[a], b) == uint64(1) or _get_bit(closed[a], b) == uint64(1):
                    continue
                if a < b:
                    u, v = a, b
                else:
                    u, v = b, a
                break
        else:
            ll = meta[META_LIST_LEN]
            while True:
                idx = _randbelow(rng, ll)
                code = open_list[idx]
                x = code // n
                y = code % n
                open_list[idx] = open_list[ll - 1]
                ll -= 1
                if _get_bit(edge[x], y) == uint64(0) and _get_bit(closed[x], y) == uint64(0):
                    u, v = x, y
                    break
            meta[META_LIST_LEN] = ll
        # --- insert the edge ---
        _set_bit(edge[u], v)
        _set_bit(edge[v], u)
        meta[META_OPEN] -= 1
        # --- close pairs ---
        ncand = closure_scan(edge, closed, n, nw, u, v,
                             cnt, pos, cpos, dpos, cdready, nv, bufx, bufy)
        if ncand < 0:
            meta[META_STATUS] = STATUS_OVERFLOW
            return steps_done
        newly = 0
        iclosed = 0
        for k in range(ncand):
            x = int64(bufx[k])
            y = int64(bufy[k])
            if _get_bit(closed[x], y) == uint64(1):
                continue
            _set_bit(closed[x], y)
            _set_bit(closed[y], x)
            meta[META_OPEN] -= 1
            newly += 1
            if use_imask == 1 and imask[x] == 1 and imask[y] == 1:
                iclosed += 1
        meta[META_STEP] += 1
        out_u[steps_done] = u
        out_v[steps_done] = v
        out_newly[steps_done] = newly
        out_open[steps_done] = meta[META_OPEN]
        out_iclosed[steps_done] = 2 * iclosed
        steps_done += 1
    meta[META_STATUS] = STATUS_DONE
    return steps_done


@njit(cache=True)
def degree_counts(edge, n, nw):
    out = np.empty(n, np.int64)
    for x in range(n):
        s = int64(0)
        for w in range(nw):
            s += _popcnt(edge[x, w])
        out[x] = s
    return out
