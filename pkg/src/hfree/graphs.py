"""Exact combinatorial layer: small-graph representation, automorphisms,
subgraph containment, strict 2-balancedness and extension-scaling arithmetic.

All scalings n^r are carried as exact rationals r (fractions.Fraction); no
floating point enters any balancedness or density comparison.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction

AUTOMORPHISM_VERTEX_CAP = 10
SUBGRAPH_SCAN_VERTEX_CAP = 12


class GraphFormatError(ValueError):
    """Raised for unparseable graph text."""


class SizeCapError(ValueError):
    """Raised when an input exceeds a brute-force size cap."""


def _canonical_edge(u, v):
    if u == v:
        raise ValueError(f"loop edge ({u},{v}) not allowed")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class GraphSpec:
    """A finite simple graph on vertices 0..vertex_count-1.

    Edges are stored canonically: smaller endpoint first, list sorted.
    """

    vertex_count: int
    edges: tuple = ()

    def __post_init__(self):
        if self.vertex_count <= 0:
            raise ValueError("vertex_count must be positive")
        canon = sorted(set(_canonical_edge(u, v) for u, v in self.edges))
        if len(canon) != len(list(self.edges)):
            raise ValueError("duplicate edges")
        for u, v in canon:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u},{v}) endpoint out of range")
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def edge_count(self):
        return len(self.edges)

    def adjacency_masks(self):
        """Per-vertex neighbor bitmasks (python ints)."""
        adj = [0] * self.vertex_count
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return adj

    def degrees(self):
        deg = [0] * self.vertex_count
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def has_edge(self, u, v):
        return _canonical_edge(u, v) in set(self.edges)

    def induced_edge_count(self, vertices):
        vs = set(vertices)
        return sum(1 for u, v in self.edges if u in vs and v in vs)

    def induced_edges(self, vertices):
        vs = set(vertices)
        return tuple((u, v) for u, v in self.edges if u in vs and v in vs)

    def relabeled_induced(self, vertices):
        """Induced subgraph on `vertices`, relabeled to 0..k-1 (sorted order)."""
        vs = sorted(set(vertices))
        pos = {v: i for i, v in enumerate(vs)}
        return GraphSpec(len(vs), tuple((pos[u], pos[v]) for u, v in self.induced_edges(vs)))

    def is_connected(self):
        if self.vertex_count == 1:
            return True
        adj = self.adjacency_masks()
        seen = 1
        frontier = 1
        while frontier:
            nxt = 0
            v = 0
            f = frontier
            while f:
                if f & 1:
                    nxt |= adj[v]
                f >>= 1
                v += 1
            frontier = nxt & ~seen
            seen |= nxt
        return seen == (1 << self.vertex_count) - 1

    def to_text(self):
        lines = [f"v {self.vertex_count}"]
        lines += [f"e {u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"


def parse_graph(text):
    """Parse the graph text format: `v <count>` then `e <u> <v>` lines."""
    vertex_count = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v" and len(parts) == 2:
            if vertex_count is not None:
                raise GraphFormatError(f"line {lineno}: duplicate vertex-count line")
            vertex_count = int(parts[1])
        elif parts[0] == "e" and len(parts) == 3:
            if vertex_count is None:
                raise GraphFormatError(f"line {lineno}: edge before vertex count")
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise GraphFormatError(f"line {lineno}: cannot parse {raw!r}")
    if vertex_count is None:
        raise GraphFormatError("missing `v <count>` line")
    try:
        return GraphSpec(vertex_count, tuple(edges))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from exc


_PRESET_RE = re.compile(r"^([KC])(\d+)(?:,(\d+))?$")


def complete_graph(s):
    return GraphSpec(s, tuple(itertools.combinations(range(s), 2)))


def cycle_graph(l):
    if l < 3:
        raise ValueError("cycle needs at least 3 vertices")
    return GraphSpec(l, tuple((i, (i + 1) % l) for i in range(l)))


def complete_bipartite_graph(r, s):
    return GraphSpec(r + s, tuple((i, r + j) for i in range(r) for j in range(s)))


def parse_preset(name):
    """Named presets: K<s>, C<l>, K<r>,<s>."""
    m = _PRESET_RE.match(name.strip())
    if not m:
        raise GraphFormatError(f"unknown graph preset {name!r}")
    kind, a, b = m.group(1), int(m.group(2)), m.group(3)
    if kind == "K" and b is None:
        return complete_graph(a)
    if kind == "K":
        return complete_bipartite_graph(a, int(b))
    if b is not None:
        raise GraphFormatError(f"unknown graph preset {name!r}")
    return cycle_graph(a)


def graph_from_spec_string(spec):
    """Resolve a preset name or a path to a graph text file."""
    try:
        return parse_preset(spec)
    except GraphFormatError:
        pass
    from pathlib import Path

    path = Path(spec)
    if path.is_file():
        return parse_graph(path.read_text())
    raise GraphFormatError(f"{spec!r} is neither a preset nor a readable graph file")


# ---------------------------------------------------------------------------
# Automorphisms and subgraph containment
# ---------------------------------------------------------------------------

def automorphisms(g: GraphSpec):
    """All edge-preserving bijections of g, as tuples perm[v] = image."""
    if g.vertex_count > AUTOMORPHISM_VERTEX_CAP:
        raise SizeCapError(
            f"automorphism enumeration capped at {AUTOMORPHISM_VERTEX_CAP} vertices,"
            f" got {g.vertex_count}"
        )
    n = g.vertex_count
    adj = g.adjacency_masks()
    deg = g.degrees()
    out = []
    perm = [-1] * n
    used = [False] * n

    def extend(v):
        if v == n:
            out.append(tuple(perm))
            return
        for w in range(n):
            if used[w] or deg[w] != deg[v]:
                continue
            ok = True
            for u in range(v):
                if ((adj[v] >> u) & 1) != ((adj[w] >> perm[u]) & 1):
                    ok = False
                    break
            if ok:
                perm[v] = w
                used[w] = True
                extend(v + 1)
                used[w] = False
        perm[v] = -1

    extend(0)
    return out


def automorphism_count(g: GraphSpec):
    return len(automorphisms(g))


def _embedding_order(h: GraphSpec):
    """Order h's vertices so every vertex after the first has an earlier
    neighbor where the component structure allows, components front-loaded."""
    n = h.vertex_count
    adj = h.adjacency_masks()
    deg = h.degrees()
    order = []
    placed = set()
    while len(order) < n:
        best = None
        for v in range(n):
            if v in placed:
                continue
            nbrs = sum(1 for u in placed if (adj[v] >> u) & 1)
            key = (nbrs, deg[v], -v)
            if best is None or key > best[0]:
                best = (key, v)
        order.append(best[1])
        placed.add(best[1])
    return order


def contains_subgraph(g: GraphSpec, h: GraphSpec):
    """True iff some injective map V_h -> V_g carries E_h into E_g
    (not necessarily induced)."""
    if h.vertex_count > SUBGRAPH_SCAN_VERTEX_CAP:
        raise SizeCapError(f"pattern too large ({h.vertex_count} vertices)")
    if h.vertex_count > g.vertex_count or h.edge_count > g.edge_count:
        return False
    if h.edge_count == 0:
        return True
    gadj = g.adjacency_masks()
    hadj = h.adjacency_masks()
    hdeg = h.degrees()
    gdeg = g.degrees()
    order = _embedding_order(h)
    full = (1 << g.vertex_count) - 1
    img = [-1] * h.vertex_count

    def extend(k, used):
        if k == len(order):
            return True
        v = order[k]
        cand = full & ~used
        for j in range(k):
            u = order[j]
            if (hadj[v] >> u) & 1:
                cand &= gadj[img[u]]
        c = cand
        while c:
            w = (c & -c).bit_length() - 1
            c &= c - 1
            if gdeg[w] < hdeg[v]:
                continue
            img[v] = w
            if extend(k + 1, used | (1 << w)):
                return True
        img[v] = -1
        return False

    return extend(0, 0)


# ---------------------------------------------------------------------------
# Balancedness and scalings
# ---------------------------------------------------------------------------

def is_strictly_two_balanced(g: GraphSpec):
    """True iff v,e >= 3 and (e-1)/(v-2) strictly exceeds the same ratio for
    every proper subgraph on >= 3 vertices.

    Scanning induced subgraphs on proper vertex subsets suffices: for a fixed
    vertex set the induced subgraph maximizes the ratio, and proper spanning
    subgraphs have strictly smaller numerator.
    """
    if g.vertex_count > SUBGRAPH_SCAN_VERTEX_CAP:
        raise SizeCapError(f"balancedness scan capped at {SUBGRAPH_SCAN_VERTEX_CAP} vertices")
    if g.vertex_count < 3 or g.edge_count < 3:
        return False
    whole = Fraction(g.edge_count - 1, g.vertex_count - 2)
    verts = range(g.vertex_count)
    for k in range(3, g.vertex_count):
        for sub in itertools.combinations(verts, k):
            e_sub = g.induced_edge_count(sub)
            if e_sub <= 1:
                continue
            if Fraction(e_sub - 1, k - 2) >= whole:
                return False
    return True


def _is_two_connected(g: GraphSpec):
    if g.vertex_count < 3 or not g.is_connected():
        return False
    for v in range(g.vertex_count):
        rest = [u for u in range(g.vertex_count) if u != v]
        if not g.relabeled_induced(rest).is_connected():
            return False
    return True


def p_exponent(h: GraphSpec):
    """Exponent rho with p = n^{-rho}: rho = (v-2)/(e-1), lowest terms."""
    if h.edge_count <= 1:
        raise ValueError("degenerate graph: need at least 2 edges")
    if h.vertex_count < 3:
        raise ValueError("need at least 3 vertices")
    return Fraction(h.vertex_count - 2, h.edge_count - 1)


@dataclass(frozen=True)
class ForbiddenGraph:
    """A validated strictly 2-balanced forbidden graph H with its derived
    constants: aut(H) and the exponent rho with p = n^{-rho}."""

    graph: GraphSpec
    aut_count: int
    rho: Fraction

    @classmethod
    def from_graph(cls, g: GraphSpec):
        if not is_strictly_two_balanced(g):
            raise ValueError("graph is not strictly 2-balanced")
        # Sanity checks implied by strict 2-balancedness.
        assert g.vertex_count >= 3 and g.edge_count >= 3
        assert min(g.degrees()) >= 2
        assert _is_two_connected(g)
        return cls(graph=g, aut_count=automorphism_count(g), rho=p_exponent(g))

    @property
    def v_h(self):
        return self.graph.vertex_count

    @property
    def e_h(self):
        return self.graph.edge_count


def forbidden_graph(spec):
    """Build a ForbiddenGraph from a GraphSpec, preset name, or file path."""
    if isinstance(spec, ForbiddenGraph):
        return spec
    if isinstance(spec, GraphSpec):
        return ForbiddenGraph.from_graph(spec)
    return ForbiddenGraph.from_graph(graph_from_spec_string(spec))


def scaling_exponent(h: ForbiddenGraph, g: GraphSpec):
    """log_n S_g where S_g = p^{e_g} n^{v_g}."""
    return Fraction(g.vertex_count) - g.edge_count * h.rho


@dataclass(frozen=True)
class RootedPattern:
    """A graph with a distinguished independent anchor set."""

    gamma: GraphSpec
    anchor: tuple

    def __post_init__(self):
        anchor = tuple(sorted(set(self.anchor)))
        for a in anchor:
            if not (0 <= a < self.gamma.vertex_count):
                raise ValueError(f"anchor vertex {a} out of range")
        for u, v in self.gamma.edges:
            if u in anchor and v in anchor:
                raise ValueError("anchor set is not independent")
        object.__setattr__(self, "anchor", anchor)


def pair_scaling_exponent(h, gamma: GraphSpec, anchor):
    """log_n S_{A,gamma} = (v - |A|) - (e - e_{gamma[A]}) * rho."""
    h = forbidden_graph(h)
    anchor = tuple(sorted(set(anchor)))
    for a in anchor:
        if not (0 <= a < gamma.vertex_count):
            raise ValueError(f"anchor vertex {a} not in the pattern graph")
    e_anchor = gamma.induced_edge_count(anchor)
    return Fraction(gamma.vertex_count - len(anchor)) - (gamma.edge_count - e_anchor) * h.rho


@dataclass(frozen=True)
class PairClassification:
    strictly_balanced: bool
    dense: bool
    strictly_dense: bool


def _nonanchor_subsets(gamma, anchor, lo, hi, include_full):
    """Vertex sets B with anchor subset of B; |B|-|anchor| in [lo, hi]."""
    others = [v for v in range(gamma.vertex_count) if v not in anchor]
    top = len(others) if include_full else len(others) - 1
    for k in range(lo, min(hi, top) + 1):
        for extra in itertools.combinations(others, k):
            yield tuple(sorted(anchor + extra))


def _is_strictly_balanced_pair(h, gamma, anchor):
    """S_{B,gamma} < 1 for all anchor < B < V (vacuously true otherwise)."""
    n_extra = gamma.vertex_count - len(anchor)
    for b in _nonanchor_subsets(gamma, anchor, 1, n_extra - 1, include_full=False):
        if pair_scaling_exponent(h, gamma, b) >= 0:
            return False
    return True


def _pattern_parts(pattern):
    """Accept a RootedPattern or a raw (gamma, anchor) pair.

    The raw form permits anchors spanning edges, needed to classify pairs
    like (xy, H minus uv) where xy is itself an edge.
    """
    if isinstance(pattern, RootedPattern):
        return pattern.gamma, pattern.anchor
    gamma, anchor = pattern
    return gamma, tuple(sorted(set(anchor)))


def classify_pair(h, pattern):
    """Strict balancedness / density of (A, gamma), by exact exponent arithmetic."""
    h = forbidden_graph(h)
    gamma, anchor = _pattern_parts(pattern)
    if gamma.vertex_count > SUBGRAPH_SCAN_VERTEX_CAP:
        raise SizeCapError("pattern exceeds the subgraph scan cap")
    strictly_balanced = _is_strictly_balanced_pair(h, gamma, anchor)
    strictly_dense = True
    n_extra = gamma.vertex_count - len(anchor)
    for b in _nonanchor_subsets(gamma, anchor, 1, n_extra, include_full=True):
        sub = gamma.relabeled_induced(b)
        sub_anchor = tuple(i for i, v in enumerate(sorted(b)) if v in anchor)
        if pair_scaling_exponent(h, sub, sub_anchor) <= 0:
            strictly_dense = False
            break
    series = extension_series(h, pattern)
    dense = (not series.step_exponents) or series.step_exponents[0] >= 0
    return PairClassification(strictly_balanced, dense, strictly_dense)


@dataclass(frozen=True)
class ExtensionSeries:
    """Nested decomposition A = B_0 < B_1 < ... < B_d = V into strictly
    balanced extension steps, with step i's scaling exponent."""

    sets: tuple  # tuple of sorted vertex tuples
    step_exponents: tuple  # tuple of Fraction

    @property
    def total_exponent(self):
        return sum(self.step_exponents, Fraction(0))


def extension_series(h: ForbiddenGraph, pattern: RootedPattern):
    """Construct the extension series of (A, gamma).

    While (B_i, gamma) is not strictly balanced, B_{i+1} is an
    inclusion-minimal set among those strictly between B_i and V that
    minimize S_{B_i, gamma[C]}; ties broken by lexicographically smallest
    vertex tuple. Otherwise B_{i+1} = V.
    """
    h = forbidden_graph(h)
    gamma, anchor = _pattern_parts(pattern)
    if gamma.vertex_count > SUBGRAPH_SCAN_VERTEX_CAP:
        raise SizeCapError("pattern exceeds the subgraph scan cap")
    full = tuple(range(gamma.vertex_count))
    sets = [tuple(anchor)]
    exps = []
    current = tuple(anchor)
    while current != full:
        n_extra = gamma.vertex_count - len(current)
        if n_extra >= 2 and not _is_strictly_balanced_pair(h, gamma, current):
            e_cur = gamma.induced_edge_count(current)
            best_exp, candidates = None, []
            for c in _nonanchor_subsets(gamma, current, 1, n_extra - 1, include_full=False):
                exp = Fraction(len(c) - len(current)) - (
                    gamma.induced_edge_count(c) - e_cur) * h.rho
                if best_exp is None or exp < best_exp:
                    best_exp, candidates = exp, [c]
                elif exp == best_exp:
                    candidates.append(c)
            minimal = [
                c for c in candidates
                if not any(set(o) < set(c) for o in candidates)
            ]
            nxt = min(minimal)
            exps.append(best_exp)
        else:
            nxt = full
            exps.append(pair_scaling_exponent(h, gamma, current))
        sets.append(nxt)
        current = nxt
    return ExtensionSeries(tuple(sets), tuple(exps))
