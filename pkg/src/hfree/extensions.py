"""Extension patterns: trackability tests, anchored extension counting,
closure quadruples and the closure identity check.

Also builds the flattened search plans consumed by the compiled kernels:
a vertex placement order plus per-position constraint lists.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .graphs import (
    ForbiddenGraph,
    GraphFormatError,
    GraphSpec,
    RootedPattern,
    automorphisms,
    classify_pair,
    contains_subgraph,
    forbidden_graph,
    pair_scaling_exponent,
    parse_graph,
)


@dataclass(frozen=True)
class ExtensionPattern:
    """A triple (gamma, J, A): gamma with a spanning subgraph J on the edge
    subset j_edges and an independent anchor set A."""

    gamma: GraphSpec
    j_edges: tuple
    anchor: tuple
    name: str = ""

    def __post_init__(self):
        gamma_edges = set(self.gamma.edges)
        j = tuple(sorted(set((min(u, v), max(u, v)) for u, v in self.j_edges)))
        for e in j:
            if e not in gamma_edges:
                raise ValueError(f"J edge {e} not an edge of gamma")
        anchor = tuple(sorted(set(self.anchor)))
        RootedPattern(self.gamma, anchor)  # validates range + independence
        object.__setattr__(self, "j_edges", j)
        object.__setattr__(self, "anchor", anchor)

    @property
    def e_j(self):
        return len(self.j_edges)

    @property
    def e_gamma(self):
        return self.gamma.edge_count

    @property
    def open_edges(self):
        jset = set(self.j_edges)
        return tuple(e for e in self.gamma.edges if e not in jset)


@dataclass(frozen=True)
class Anchor:
    """An injective assignment of process vertices to the anchor set, in
    anchor-sorted order."""

    images: tuple

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        if len(set(images)) != len(images):
            raise ValueError("anchor images must be injective")
        object.__setattr__(self, "images", images)


def _as_images(anchor, size):
    images = anchor.images if isinstance(anchor, Anchor) else tuple(anchor)
    if len(set(images)) != len(images):
        raise ValueError("anchor images must be injective")
    if len(images) != size:
        raise ValueError(f"expected {size} anchor images, got {len(images)}")
    return images


# ---------------------------------------------------------------------------
# Search plans
# ---------------------------------------------------------------------------

def _greedy_order(nv, fixed, pref_edges, aux_edges=(), defer=()):
    """Place `fixed` first, then repeatedly the vertex with the most
    pref-edges to placed vertices (ties: aux-edges, then avoid `defer`,
    then lowest id)."""
    pref = {v: set() for v in range(nv)}
    for u, v in pref_edges:
        pref[u].add(v)
        pref[v].add(u)
    aux = {v: set() for v in range(nv)}
    for u, v in aux_edges:
        aux[u].add(v)
        aux[v].add(u)
    order = list(fixed)
    placed = set(order)
    defer = set(defer)
    while len(order) < nv:
        best_key, best_v = None, None
        for v in range(nv):
            if v in placed:
                continue
            key = (len(pref[v] & placed), len(aux[v] & placed),
                   0 if v in defer else 1, -v)
            if best_key is None or key > best_key:
                best_key, best_v = key, v
        order.append(best_v)
        placed.add(best_v)
    return order


def _constraint_arrays(order, edges, n_fixed):
    """Per-position lists of earlier positions adjacent via `edges`."""
    nv = len(order)
    posidx = {v: k for k, v in enumerate(order)}
    eset = set((min(u, v), max(u, v)) for u, v in edges)
    cnt = np.zeros(nv, np.int64)
    pos = np.zeros((nv, nv), np.int64)
    for k in range(n_fixed, nv):
        v = order[k]
        for j in range(k):
            u = order[j]
            if (min(u, v), max(u, v)) in eset:
                pos[k, cnt[k]] = j
                cnt[k] += 1
    return cnt, pos


def closure_quadruples(h: ForbiddenGraph):
    """All ordered quadruples T=(a,b,c,d) with {a,b}, {c,d} distinct edges of
    h, both orderings of each edge, with the graphs gamma_T = H minus ab and
    J_T = H minus {ab, cd}."""
    g = h.graph
    out = []
    for e1 in g.edges:
        for ab in (e1, (e1[1], e1[0])):
            for e2 in g.edges:
                if e2 == e1:
                    continue
                for cd in (e2, (e2[1], e2[0])):
                    gamma = GraphSpec(g.vertex_count,
                                      tuple(e for e in g.edges if e != e1))
                    j_edges = tuple(e for e in g.edges if e not in (e1, e2))
                    out.append((ab + cd, gamma, j_edges))
    return out


def quadruple_orbit_reps(h: ForbiddenGraph):
    """One representative quadruple per orbit of the automorphism action.

    The union of anchored closure embeddings over an orbit equals that of
    any single representative, so the engine only searches representatives.
    """
    auts = automorphisms(h.graph)
    quads = [q[0] for q in closure_quadruples(h)]
    seen = set()
    reps = []
    for q in sorted(quads):
        if q in seen:
            continue
        reps.append(q)
        for sig in auts:
            seen.add(tuple(sig[x] for x in q))
    return reps


def _closure_plan_from_quads(h: ForbiddenGraph, quads):
    g = h.graph
    nv = g.vertex_count
    nrep = len(quads)
    cnt = np.zeros((nrep, nv), np.int64)
    pos = np.zeros((nrep, nv, nv), np.int64)
    cpos = np.zeros(nrep, np.int64)
    dpos = np.zeros(nrep, np.int64)
    cdready = np.zeros(nrep, np.int64)
    for r, (a, b, c, d) in enumerate(quads):
        e1 = (min(a, b), max(a, b))
        e2 = (min(c, d), max(c, d))
        j_edges = [e for e in g.edges if e not in (e1, e2)]
        order = _greedy_order(nv, [a, b], j_edges, defer=[c, d])
        posidx = {v: k for k, v in enumerate(order)}
        for k in range(2, nv):
            v = order[k]
            if not any((min(order[j], v), max(order[j], v)) in set(j_edges)
                       for j in range(k)):
                raise AssertionError("closure plan vertex without placed neighbor")
        c_, p_ = _constraint_arrays(order, j_edges, 2)
        cnt[r] = c_
        pos[r] = p_
        pc, pd = posidx[c], posidx[d]
        # put the anchor endpoint (position 0/1) first so the kernel's row
        # lookups for the closing pair stay on the hot anchor rows
        if pd <= 1 < pc:
            pc, pd = pd, pc
        cpos[r] = pc
        dpos[r] = pd
        cdready[r] = max(pc, pd)
    return cnt, pos, cpos, dpos, cdready, nv


@functools.lru_cache(maxsize=None)
def _closure_plan_cached(graph: GraphSpec):
    h = ForbiddenGraph.from_graph(graph)
    return _closure_plan_from_quads(h, quadruple_orbit_reps(h))


@functools.lru_cache(maxsize=None)
def _full_closure_plan_cached(graph: GraphSpec):
    h = ForbiddenGraph.from_graph(graph)
    quads = [q[0] for q in closure_quadruples(h)]
    return _closure_plan_from_quads(h, quads)


@functools.lru_cache(maxsize=None)
def _anchor_plan_cached(graph: GraphSpec):
    """Plans for detecting a copy of the graph with a designated edge image:
    one plan per orbit of ordered edges, all remaining edges as constraints."""
    g = graph
    auts = automorphisms(g)
    ordered = [e for uv in g.edges for e in (uv, (uv[1], uv[0]))]
    seen = set()
    reps = []
    for e in sorted(ordered):
        if e in seen:
            continue
        reps.append(e)
        for sig in auts:
            seen.add((sig[e[0]], sig[e[1]]))
    nv = g.vertex_count
    nrep = len(reps)
    cnt = np.zeros((nrep, nv), np.int64)
    pos = np.zeros((nrep, nv, nv), np.int64)
    for r, (a, b) in enumerate(reps):
        e1 = (min(a, b), max(a, b))
        rest = [e for e in g.edges if e != e1]
        order = _greedy_order(nv, [a, b], rest)
        c_, p_ = _constraint_arrays(order, rest, 2)
        cnt[r] = c_
        pos[r] = p_
    return cnt, pos, nv


def closure_plan(h: ForbiddenGraph):
    return _closure_plan_cached(h.graph)


def full_closure_plan(h: ForbiddenGraph):
    return _full_closure_plan_cached(h.graph)


def anchor_plan(g: GraphSpec):
    return _anchor_plan_cached(g)


@functools.lru_cache(maxsize=None)
def _count_plan_cached(gamma: GraphSpec, j_edges, anchor):
    nv = gamma.vertex_count
    open_edges = tuple(e for e in gamma.edges if e not in set(j_edges))
    order = _greedy_order(nv, list(anchor), j_edges, aux_edges=open_edges)
    ecnt, epos = _constraint_arrays(order, j_edges, len(anchor))
    ocnt, opos = _constraint_arrays(order, open_edges, len(anchor))
    return order, ecnt, epos, ocnt, opos


def count_plan(pattern: ExtensionPattern):
    return _count_plan_cached(pattern.gamma, pattern.j_edges, pattern.anchor)


# ---------------------------------------------------------------------------
# Counting operations
# ---------------------------------------------------------------------------

def count_extensions(state, pattern: ExtensionPattern, anchor=()):
    """Exact number of injective maps f with f(e) an edge for e in J, f(e)
    open for e in gamma minus J, and f restricted to the anchor equal to the
    given images."""
    images = _as_images(anchor, len(pattern.anchor))
    order, ecnt, epos, ocnt, opos = count_plan(pattern)
    # anchor images must follow the plan's placement order of the anchors
    imgmap = dict(zip(pattern.anchor, images))
    ordered_imgs = np.array([imgmap[v] for v in order[:len(pattern.anchor)]],
                            np.int64)
    for x in ordered_imgs:
        if not (0 <= x < state.n):
            raise ValueError(f"anchor image {x} out of range")
    return int(K.count_maps(state.edge_bits, state.closed_bits,
                            state.n, state.nw, ordered_imgs,
                            ecnt, epos, ocnt, opos,
                            pattern.gamma.vertex_count))


def count_embeddings(state, j: GraphSpec, anchorset=(), anchor=()):
    """N_{phi,J}: injective embeddings of j into the edge graph extending
    the anchor map, with no open-pair constraints."""
    pattern = ExtensionPattern(j, j.edges, tuple(anchorset))
    return count_extensions(state, pattern, anchor)


def enumerate_extensions(state, pattern: ExtensionPattern, anchor=()):
    """Materialize the extension set as a sorted list of image tuples
    (test-scale helper)."""
    total = count_extensions(state, pattern, anchor)
    images = _as_images(anchor, len(pattern.anchor))
    order, ecnt, epos, ocnt, opos = count_plan(pattern)
    imgmap = dict(zip(pattern.anchor, images))
    ordered_imgs = np.array([imgmap[v] for v in order[:len(pattern.anchor)]],
                            np.int64)
    out = np.empty((max(total, 1), pattern.gamma.vertex_count), np.int64)
    got = K.enumerate_maps(state.edge_bits, state.closed_bits,
                           state.n, state.nw, ordered_imgs,
                           ecnt, epos, ocnt, opos,
                           pattern.gamma.vertex_count, out)
    assert got == total
    inv = {k: v for k, v in enumerate(order)}
    maps = []
    for row in out[:got]:
        f = [0] * pattern.gamma.vertex_count
        for k, x in enumerate(row):
            f[inv[k]] = int(x)
        maps.append(tuple(f))
    return sorted(maps)


# ---------------------------------------------------------------------------
# Trackability
# ---------------------------------------------------------------------------

def is_trackable(h: ForbiddenGraph, pattern: ExtensionPattern,
                 anchor=None, state=None):
    """Trackability of X_{phi,J,gamma}: either (a) the pair (A, gamma) is
    strictly dense and gamma is H-free, or (b) S_{A,gamma} = 1, (A, gamma)
    is strictly balanced, J is a proper spanning subgraph, and H is not a
    subgraph of gamma plus the anchor pairs realized as edges under phi."""
    h = forbidden_graph(h)
    gamma, a = pattern.gamma, pattern.anchor
    cls = classify_pair(h, (gamma, a))
    gamma_has_h = contains_subgraph(gamma, h.graph)
    if cls.strictly_dense and not gamma_has_h:
        return True
    if pair_scaling_exponent(h, gamma, a) != 0:
        return False
    if not cls.strictly_balanced:
        return False
    if len(pattern.j_edges) >= gamma.edge_count:
        return False
    extra = []
    if anchor is not None and state is not None:
        images = _as_images(anchor, len(a))
        imgmap = dict(zip(a, images))
        for i, x in enumerate(a):
            for y in a[i + 1:]:
                if state.has_edge(imgmap[x], imgmap[y]):
                    extra.append((x, y))
    gamma_prime = GraphSpec(gamma.vertex_count, gamma.edges + tuple(extra))
    return not contains_subgraph(gamma_prime, h.graph)


# ---------------------------------------------------------------------------
# Closure identity and one-step decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosureIdentity:
    direct: int          # ordered count of open pairs that uv would close
    formula: Fraction    # aut(H)^{-1} sum over quadruples of X_{phi_T,J_T,gamma_T}


def closure_identity_check(state, u, v):
    """Compare the directly computed closing set of (u, v) against the
    quadruple-sum formula; formula >= direct always holds."""
    if state.has_edge(u, v):
        raise ValueError(f"({u},{v}) is an edge")
    h = state.h
    cnt, pos, cpos, dpos, cdready, nv = full_closure_plan(h)
    total = int(K.closure_formula_count(
        state.edge_bits, state.closed_bits, state.n, state.nw,
        u, v, cnt, pos, cpos, dpos, cdready, nv))
    direct = 2 * sum(1 for (x, y) in state.closing_set(u, v)
                     if state.is_open(x, y))
    return ClosureIdentity(direct=direct, formula=Fraction(total, h.aut_count))


@dataclass(frozen=True)
class DeltaDecomposition:
    y_plus: int
    y_minus: int


def delta_decomposition(before, after, pattern: ExtensionPattern, anchor=()):
    """Split X(i+1) - X(i) into created and destroyed extensions by
    materializing both extension sets (test-scale op)."""
    if after.i != before.i + 1:
        raise ValueError("states are not one step apart")
    if not np.all((before.edge_bits & after.edge_bits) == before.edge_bits):
        raise ValueError("after-state does not extend before-state")
    xi_before = set(enumerate_extensions(before, pattern, anchor))
    xi_after = set(enumerate_extensions(after, pattern, anchor))
    return DeltaDecomposition(y_plus=len(xi_after - xi_before),
                              y_minus=len(xi_before - xi_after))


def closed_overlap(state, pair1, pair2):
    """|C_{uv} intersect C_{u'v'}| (unordered count) for distinct non-edges."""
    p1 = tuple(sorted(pair1))
    p2 = tuple(sorted(pair2))
    if p1 == p2:
        raise ValueError("pairs must be distinct")
    for (x, y) in (p1, p2):
        if state.has_edge(x, y):
            raise ValueError(f"({x},{y}) is an edge")
    return len(state.closing_set(*p1) & state.closing_set(*p2))


# ---------------------------------------------------------------------------
# Pattern catalogue
# ---------------------------------------------------------------------------

def q_pattern():
    """The open-pair count pattern: one potential edge, empty anchor."""
    return ExtensionPattern(GraphSpec(2, ((0, 1),)), (), (), name="Q")


def degree_pattern():
    return ExtensionPattern(GraphSpec(2, ((0, 1),)), ((0, 1),), (0,),
                            name="degree")


def common_neighbor_pattern(d):
    """d anchor vertices plus one common neighbor, all star edges in J."""
    edges = tuple((i, d) for i in range(d))
    return ExtensionPattern(GraphSpec(d + 1, edges), edges, tuple(range(d)),
                            name=f"conbr{d}")


def closure_pattern(h: ForbiddenGraph, quad):
    """The open-route pattern (gamma_T, J_T, {a,b}) for a quadruple T,
    relabeled so the anchors are the lowest vertex ids."""
    a, b, c, d = quad
    g = h.graph
    nv = g.vertex_count
    rest = [v for v in range(nv) if v not in (a, b)]
    relab = {a: 0, b: 1, **{v: i + 2 for i, v in enumerate(rest)}}
    e1 = (min(a, b), max(a, b))
    e2 = (min(c, d), max(c, d))
    gamma_edges = tuple(sorted((min(relab[u], relab[v]), max(relab[u], relab[v]))
                               for u, v in g.edges if (u, v) != e1))
    j_edges = tuple(sorted((min(relab[u], relab[v]), max(relab[u], relab[v]))
                           for u, v in g.edges if (u, v) not in (e1, e2)))
    return ExtensionPattern(GraphSpec(nv, gamma_edges), j_edges, (0, 1),
                            name=f"route_{a}{b}_{c}{d}")


def build_catalogue(h: ForbiddenGraph, extra_patterns=()):
    """The default tracked-pattern catalogue: open pairs, vertex degree,
    common neighborhoods for every d with p^d n > 1, and one open-route
    pattern per quadruple orbit; user patterns validated for trackability."""
    h = forbidden_graph(h)
    cat = [q_pattern(), degree_pattern()]
    d = 1
    while Fraction(1) - (d + 1) * h.rho > 0:
        d += 1
        cat.append(common_neighbor_pattern(d))
    seen = set()
    for quad in quadruple_orbit_reps(h):
        pat = closure_pattern(h, quad)
        key = (pat.gamma.edges, pat.j_edges)
        if key in seen:
            continue
        seen.add(key)
        cat.append(pat)
    for pat in extra_patterns:
        if not is_trackable(h, pat):
            raise ValueError(
                f"pattern {pat.name or pat} is not trackable: neither "
                "condition (a) nor condition (b) holds at the empty graph")
        cat.append(pat)
    return cat


# ---------------------------------------------------------------------------
# Checkpoint sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackSample:
    i: int
    t: float
    pattern: str
    anchor_id: int
    anchor: tuple
    observed: int
    predicted: float
    env_lo: float
    env_hi: float
    trackable: bool


class Tracker:
    """Samples every catalogued extension variable over a fixed random panel
    of anchors, drawn once and reused at every checkpoint so the time series
    are comparable.  Usable directly as a run observer."""

    def __init__(self, h, n, params=None, catalogue=None, panel_size=32,
                 panel_seed=0):
        from .trajectory import TrajectoryParams
        self.h = forbidden_graph(h)
        self.params = params if params is not None else TrajectoryParams(self.h, n)
        self.catalogue = (list(catalogue) if catalogue is not None
                          else build_catalogue(self.h))
        for pat in self.catalogue:
            if max(pat.gamma.vertex_count, pat.e_gamma) >= self.params.V:
                raise ValueError(
                    f"pattern {pat.name or pat}: size must stay below V="
                    f"{self.params.V}")
        rng = np.random.default_rng(panel_seed)
        self.panels = {}
        for pat in self.catalogue:
            k = len(pat.anchor)
            if k == 0:
                self.panels[pat.name] = [()]
            else:
                self.panels[pat.name] = [
                    tuple(int(x) for x in rng.choice(n, size=k, replace=False))
                    for _ in range(panel_size)]

    def observe(self, state):
        from . import trajectory as traj
        t = state.t
        out = []
        for pat in self.catalogue:
            exp = pair_scaling_exponent(self.h, pat.gamma, pat.anchor)
            x = traj.x_of_t(self.params, pat, t)
            lo, hi = traj.envelope(self.params, t, exp, x)
            predicted = x * float(state.n) ** float(exp)
            for aid, images in enumerate(self.panels[pat.name]):
                out.append(TrackSample(
                    i=state.i, t=t, pattern=pat.name, anchor_id=aid,
                    anchor=images,
                    observed=count_extensions(state, pat, images),
                    predicted=predicted, env_lo=lo, env_hi=hi,
                    trackable=is_trackable(self.h, pat, images, state)))
        return out

    __call__ = observe


def parse_pattern(text, name="user"):
    """Pattern definition file: graph text format plus `J <edge indices>`
    and `A <vertex list>` lines."""
    graph_lines = []
    j_idx = None
    a_list = ()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("J "):
            j_idx = tuple(int(x) for x in line.split()[1:])
        elif line.startswith("A") and (line == "A" or line[1] in " \t"):
            a_list = tuple(int(x) for x in line.split()[1:])
        else:
            graph_lines.append(raw)
    gamma = parse_graph("\n".join(graph_lines))
    if j_idx is None:
        raise GraphFormatError("pattern file missing `J <edge indices>` line")
    try:
        j_edges = tuple(gamma.edges[i] for i in j_idx)
    except IndexError as exc:
        raise GraphFormatError(f"J edge index out of range: {exc}") from exc
    return ExtensionPattern(gamma, j_edges, a_list, name=name)
