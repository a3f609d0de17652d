"""Derived statistics over process states: degrees, common neighborhoods,
subgraph census with regime classification, independence numbers, tracked-set
probes, and cross-n exponent fits.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .extensions import ExtensionPattern, count_extensions
from .graphs import (ForbiddenGraph, GraphSpec, automorphism_count,
                     contains_subgraph, forbidden_graph, scaling_exponent)


@dataclass(frozen=True)
class DegreeStats:
    min: int
    max: int
    mean: float
    predicted_mean: float   # 2i/n
    histogram: dict


def degree_stats(state):
    degs = state.degrees()
    hist = {}
    for d in np.bincount(degs).nonzero()[0]:
        hist[int(d)] = int(np.sum(degs == d))
    return DegreeStats(min=int(degs.min()), max=int(degs.max()),
                       mean=float(degs.mean()),
                       predicted_mean=2.0 * state.i / state.n,
                       histogram=hist)


def common_neighbors(state, vertices):
    """Size of the common neighborhood of the given vertex set."""
    vs = sorted(set(int(v) for v in vertices))
    if not vs:
        raise ValueError("vertex set must be nonempty")
    d = len(vs)
    if float(state.n) ** float(1 - d * state.h.rho) <= 1.0:
        warnings.warn(f"common neighborhood of {d} vertices is outside the "
                      "tracked regime (p^d n <= 1)", stacklevel=2)
    acc = state.edge_bits[vs[0]].copy()
    for v in vs[1:]:
        acc &= state.edge_bits[v]
    return int(np.bitwise_count(acc).sum())


# ---------------------------------------------------------------------------
# Subgraph census
# ---------------------------------------------------------------------------

Regime_SUB = "Subcritical"
Regime_SUPER = "Supercritical"
Regime_CRIT = "Critical"
Regime_CONTAINS = "ContainsH"


@dataclass(frozen=True)
class CensusReport:
    gamma: GraphSpec
    observed: int            # labeled (injective) copy count
    predicted: float         # (2i/n^2)^{e_gamma} n^{v_gamma}
    regime: str

    @property
    def unlabeled(self):
        return self.observed / automorphism_count(self.gamma)


def classify_regime(h, gamma: GraphSpec):
    """Trichotomy over the scaling exponents of all nonempty
    induced subgraphs of gamma (exact rational arithmetic)."""
    h = forbidden_graph(h)
    if gamma.vertex_count > 12:
        raise ValueError("regime classification capped at 12 vertices")
    if contains_subgraph(gamma, h.graph):
        return Regime_CONTAINS
    low = None
    verts = range(gamma.vertex_count)
    for mask in range(1, 1 << gamma.vertex_count):
        sub = [v for v in verts if mask >> v & 1]
        exp = Fraction(len(sub)) - gamma.induced_edge_count(sub) * h.rho
        if low is None or exp < low:
            low = exp
    if low < 0:
        return Regime_SUB
    if low == 0:
        return Regime_CRIT
    return Regime_SUPER


def _labeled_count(state, gamma: GraphSpec):
    if gamma.edge_count == 0:
        out = 1
        for k in range(gamma.vertex_count):
            out *= state.n - k
        return out
    pattern = ExtensionPattern(gamma, gamma.edges, ())
    return count_extensions(state, pattern, ())


def subgraph_census(state, gamma: GraphSpec, regime=None):
    """Exact labeled copy count of gamma in the current graph, with the
    trajectory prediction and the regime classification."""
    if state.n > 100 and gamma.vertex_count > 5:
        raise ValueError(
            f"census of a {gamma.vertex_count}-vertex graph at n={state.n} "
            "exceeds the cost cap; use a smaller graph or n <= 100")
    if regime is None:
        regime = classify_regime(state.h, gamma)
    degs = None
    if gamma == GraphSpec(2, ((0, 1),)):
        observed = 2 * state.i
    elif gamma == GraphSpec(3, ((0, 1), (0, 2))):
        # labeled cherries: sum over centers of d(d-1), times 1 for each
        # ordered leaf pair; center relabelings already counted
        degs = state.degrees()
        observed = int((degs * (degs - 1)).sum())
    else:
        observed = _labeled_count(state, gamma)
    predicted = ((2.0 * state.i / state.n ** 2) ** gamma.edge_count
                 * float(state.n) ** gamma.vertex_count)
    return CensusReport(gamma=gamma, observed=observed, predicted=predicted,
                        regime=regime)


# ---------------------------------------------------------------------------
# Independence number
# ---------------------------------------------------------------------------

def _adjacency_ints(state):
    adj = [0] * state.n
    for x in range(state.n):
        row = 0
        for w in range(state.nw - 1, -1, -1):
            row = (row << 64) | int(state.edge_bits[x, w])
        adj[x] = row
    return adj


def _greedy_independent(adj, n):
    alive = (1 << n) - 1
    best = 0
    while alive:
        v = min((x for x in range(n) if alive >> x & 1),
                key=lambda x: bin(adj[x] & alive).count("1"))
        best += 1
        alive &= ~((adj[v] | (1 << v)))
    return best


def _bb_independent(adj, n):
    """Branch and bound with a greedy-coloring upper bound."""
    best = [0]

    def clique_cover_bound(alive):
        # a partition into cliques upper-bounds alpha: an independent set
        # meets each clique at most once
        classes = []
        x = alive
        while x:
            v = (x & -x).bit_length() - 1
            x &= x - 1
            for c in classes:
                if all(adj[v] >> u & 1 for u in c):
                    c.append(v)
                    break
            else:
                classes.append([v])
        return len(classes)

    def rec(alive, size):
        if size + bin(alive).count("1") <= best[0]:
            return
        if alive == 0:
            best[0] = max(best[0], size)
            return
        if size + clique_cover_bound(alive) <= best[0]:
            return
        v = (alive & -alive).bit_length() - 1
        rec(alive & ~(adj[v] | (1 << v)), size + 1)   # take v
        rec(alive & ~(1 << v), size)                  # skip v

    rec((1 << n) - 1, 0)
    return best[0]


@dataclass(frozen=True)
class IndependenceResult:
    value: int
    exact: bool


def independence_number(state, mode="greedy", exact_cap=200):
    """alpha(G(i)): exact by branch and bound below the cap, otherwise a
    greedy lower bound (flagged)."""
    adj = _adjacency_ints(state)
    if mode == "exact":
        if state.n > exact_cap:
            raise ValueError(f"exact mode capped at n <= {exact_cap}")
        return IndependenceResult(_bb_independent(adj, state.n), True)
    if mode == "greedy":
        return IndependenceResult(_greedy_independent(adj, state.n), False)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Tracked-set quantities
# ---------------------------------------------------------------------------

def _set_words(state, vs):
    words = np.zeros(state.nw, np.uint64)
    for v in vs:
        if not 0 <= v < state.n:
            raise ValueError(f"vertex {v} out of range")
        words[v >> 6] |= np.uint64(1) << np.uint64(v & 63)
    return words


def open_pairs_within(state, vertices):
    """Q_I: ordered count of open pairs with both endpoints in the set."""
    vs = sorted(set(int(v) for v in vertices))
    if len(vs) < 2:
        return 0
    words = _set_words(state, vs)
    rows = ~(state.edge_bits[vs] | state.closed_bits[vs]) & words
    # each vertex sees itself as open; drop the diagonal
    return int(np.bitwise_count(rows).sum()) - len(vs)


def edges_between(state, a_set, b_set):
    """e(A, B): edges with one endpoint in A and the other in B; edges inside
    the intersection counted once."""
    avs = sorted(set(int(v) for v in a_set))
    bvs = sorted(set(int(v) for v in b_set))
    if not avs or not bvs:
        return 0
    bwords = _set_words(state, bvs)
    total = int(np.bitwise_count(state.edge_bits[avs] & bwords).sum())
    both = sorted(set(avs) & set(bvs))
    inner = 0
    if both:
        iwords = _set_words(state, both)
        inner = int(np.bitwise_count(state.edge_bits[both] & iwords).sum()) // 2
    return total - inner


@dataclass(frozen=True)
class ProbeResult:
    bad_edge_count: int
    max_closed_in_I: int
    threshold: float


def smooth_independence_probe(trace, vertices, threshold=None, params=None):
    """Count steps whose edge closed more than `threshold` ordered pairs
    inside the tracked set, and the per-step maximum.

    `trace` is a run result (or its trace dict) produced with record_trace
    and track_set equal to the same vertex set.
    """
    tr = getattr(trace, "trace", trace)
    if tr is None or "iclosed" not in tr:
        raise ValueError("trace lacks per-step closed-in-set counts; rerun "
                         "with record_trace=True and track_set")
    if threshold is None:
        if params is None:
            raise ValueError("need either a threshold or params")
        threshold = (float(params.n) ** (-5.0 * params.epsilon)
                     * float(params.n) ** float(params.rho))
    if len(set(vertices)) < 2:
        return ProbeResult(0, 0, float(threshold))
    iclosed = tr["iclosed"]
    if iclosed.shape[0] == 0:
        return ProbeResult(0, 0, float(threshold))
    return ProbeResult(bad_edge_count=int((iclosed > threshold).sum()),
                       max_closed_in_I=int(iclosed.max()),
                       threshold=float(threshold))


# ---------------------------------------------------------------------------
# Exponent fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points: tuple


def exponent_fit(points, polylog_exponent=0.0):
    """Least-squares slope of log value against log n; a nonzero
    polylog_exponent divides values by (log n)^that before fitting."""
    pts = [(int(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if len(set(n for n, _ in pts)) != len(pts):
        raise ValueError("n values must be distinct")
    logs = []
    for n, v in pts:
        if n < 2 or v <= 0:
            raise ValueError(f"invalid point ({n}, {v})")
        logs.append((math.log(n),
                     math.log(v / math.log(n) ** polylog_exponent)))
    xs = np.array([x for x, _ in logs])
    ys = np.array([y for _, y in logs])
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), res, _, _ = np.linalg.lstsq(A, ys, rcond=None)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = float(res[0]) if res.size else float(
            ((ys - A @ np.array([slope, intercept])) ** 2).sum())
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope=float(slope), intercept=float(intercept),
                     r_squared=r2, points=tuple(logs))
