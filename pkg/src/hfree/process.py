"""The H-free random graph process engine.

Maintains packed edge and closed-pair bit matrices, samples uniform open
pairs, and closes pairs incrementally via anchored copy searches.  A
from-scratch status oracle using an independent search strategy is provided
for verification.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _kernels as K
from .extensions import anchor_plan, closure_plan
from .graphs import ForbiddenGraph, forbidden_graph


class Status(IntEnum):
    OPEN = 0
    EDGE = 1
    CLOSED = 2


@dataclass(frozen=True)
class StepRecord:
    i: int                # step index after this step (edges in the graph)
    u: int
    v: int
    newly_closed: int     # unordered pairs closed by this step
    open_after: int       # unordered open pairs remaining
    t: float              # i / (p n^2)


@dataclass
class RunResult:
    steps: int
    terminated: bool
    iclosed_total: int = 0        # ordered tracked-set pairs closed in the run
    checkpoints: list = field(default_factory=list)
    trace: dict | None = None


_MASK64 = (1 << 64) - 1


class ProcessState:
    """One realization of the process on n vertices, reproducible from the
    seed: identical (h, n, seed) always yields an identical trajectory."""

    def __init__(self, h, n, seed=0, sampler="auto", closure_buf=None):
        self.h = forbidden_graph(h)
        if n < self.h.graph.vertex_count:
            raise ValueError(
                f"n={n} is below the forbidden graph order "
                f"{self.h.graph.vertex_count}")
        self.n = int(n)
        self.nw = (self.n + 63) // 64
        self.seed = int(seed) & _MASK64
        if sampler not in ("auto", "rejection", "explicit"):
            raise ValueError(f"unknown sampler {sampler!r}")
        self.sampler = sampler
        self.edge_bits = np.zeros((self.n, self.nw), np.uint64)
        self.closed_bits = np.zeros((self.n, self.nw), np.uint64)
        self._rng = np.array([self.seed], np.uint64)
        self._meta = np.zeros(8, np.int64)
        self._meta[K.META_OPEN] = self.n * (self.n - 1) // 2
        self._meta[K.META_MODE] = 0
        self._meta[K.META_FALLBACK] = 1 if sampler == "auto" else 0
        self._open_list = np.zeros(0, np.int64)
        if sampler == "explicit":
            self._install_open_list()
        cap = closure_buf if closure_buf is not None else max(1 << 16, 64 * self.n)
        self._bufx = np.empty(cap, np.int32)
        self._bufy = np.empty(cap, np.int32)
        self._plan = closure_plan(self.h)
        self._oracle_plan = None
        self._imask = np.zeros(self.n, np.uint8)

    # -- basic accessors ---------------------------------------------------

    @property
    def i(self):
        return int(self._meta[K.META_STEP])

    @property
    def open_pairs(self):
        """Unordered open pair count."""
        return int(self._meta[K.META_OPEN])

    @property
    def q(self):
        """Ordered open pair count Q(i)."""
        return 2 * self.open_pairs

    @property
    def s(self):
        """Time scale s = p n^2 = n^(2 - rho)."""
        return float(self.n) ** float(2 - self.h.rho)

    @property
    def t(self):
        return self.i / self.s

    @property
    def terminated(self):
        return self.open_pairs == 0

    def time_of(self, i):
        return i / self.s

    def step_of(self, t):
        return int(round(t * self.s))

    def _check_pair(self, x, y):
        if not (0 <= x < self.n and 0 <= y < self.n) or x == y:
            raise ValueError(f"invalid pair ({x},{y})")

    def has_edge(self, x, y):
        self._check_pair(x, y)
        return bool((int(self.edge_bits[x, y >> 6]) >> (y & 63)) & 1)

    def is_closed(self, x, y):
        self._check_pair(x, y)
        return bool((int(self.closed_bits[x, y >> 6]) >> (y & 63)) & 1)

    def is_open(self, x, y):
        return not (self.has_edge(x, y) or self.is_closed(x, y))

    def status(self, x, y):
        if self.has_edge(x, y):
            return Status.EDGE
        if self.is_closed(x, y):
            return Status.CLOSED
        return Status.OPEN

    def status_table(self):
        """Dense n x n status matrix (diagonal set to 255)."""
        out = np.zeros((self.n, self.n), np.uint8)
        cols = np.arange(self.n)
        for x in range(self.n):
            erow = np.bitwise_and(
                np.right_shift(self.edge_bits[x, cols >> 6], (cols & 63).astype(np.uint64)),
                np.uint64(1))
            crow = np.bitwise_and(
                np.right_shift(self.closed_bits[x, cols >> 6], (cols & 63).astype(np.uint64)),
                np.uint64(1))
            out[x] = erow.astype(np.uint8) * Status.EDGE + crow.astype(np.uint8) * Status.CLOSED
        np.fill_diagonal(out, 255)
        return out

    def edges(self):
        """Sorted list of current edges."""
        out = []
        for x in range(self.n):
            for y in range(x + 1, self.n):
                if self.has_edge(x, y):
                    out.append((x, y))
        return out

    def degrees(self):
        return K.degree_counts(self.edge_bits, self.n, self.nw)

    # -- sampling machinery --------------------------------------------------

    def _install_open_list(self):
        self._open_list = K.build_open_list(self.edge_bits, self.closed_bits,
                                            self.n, self.nw)
        self._meta[K.META_LIST_LEN] = self._open_list.shape[0]
        self._meta[K.META_MODE] = 1

    # -- running -------------------------------------------------------------

    def _run_raw(self, max_steps, imask=None):
        """Advance up to max_steps, returning per-step record arrays."""
        out_u = np.empty(max_steps, np.int64)
        out_v = np.empty(max_steps, np.int64)
        out_newly = np.empty(max_steps, np.int64)
        out_open = np.empty(max_steps, np.int64)
        out_iclosed = np.empty(max_steps, np.int64)
        use_imask = 0 if imask is None else 1
        if imask is None:
            imask = self._imask
        done = 0
        cnt, pos, cpos, dpos, cdready, nv = self._plan
        while done < max_steps:
            got = K.run_chunk(self.edge_bits, self.closed_bits, self.n, self.nw,
                              self._rng, self._meta,
                              cnt, pos, cpos, dpos, cdready, nv,
                              max_steps - done,
                              out_u[done:], out_v[done:], out_newly[done:],
                              out_open[done:], self._open_list,
                              use_imask, imask, out_iclosed[done:],
                              self._bufx, self._bufy)
            done += got
            status = self._meta[K.META_STATUS]
            if status == K.STATUS_TERMINATED:
                break
            if status == K.STATUS_WANT_LIST:
                self._install_open_list()
                continue
            if status == K.STATUS_OVERFLOW:
                raise RuntimeError(
                    "closure candidate buffer overflow; recreate the state "
                    "with a larger closure_buf")
        return (out_u[:done], out_v[:done], out_newly[:done],
                out_open[:done], out_iclosed[:done])

    def step(self):
        """Advance one step; None once the process has terminated."""
        u, v, newly, open_after, _ = self._run_raw(1)
        if u.shape[0] == 0:
            return None
        return StepRecord(i=self.i, u=int(u[0]), v=int(v[0]),
                          newly_closed=int(newly[0]),
                          open_after=int(open_after[0]), t=self.t)

    def run(self, max_steps=None, checkpoints=(), observers=(),
            record_trace=False, track_set=None, chunk_size=1 << 18):
        """Run until termination or until max_steps total steps are reached.

        `checkpoints` are absolute step indices; at each (and at the end of
        the run) every observer is called with the state and the returned
        values are collected.  With `track_set`, ordered pair closures inside
        the set are accumulated into iclosed_total.
        """
        if max_steps is None:
            target = None
        else:
            target = int(max_steps)
            if target < self.i:
                raise ValueError(f"max_steps={target} is before step {self.i}")
        imask = None
        if track_set is not None:
            imask = np.zeros(self.n, np.uint8)
            for x in track_set:
                imask[x] = 1
        def observe():
            out = []
            for obs in observers:
                try:
                    out.append(obs(self))
                except Exception as exc:
                    name = getattr(obs, "__name__", repr(obs))
                    raise RuntimeError(
                        f"observer {name} failed at step {self.i}") from exc
            return out

        marks = sorted(set(int(c) for c in checkpoints if int(c) >= self.i))
        result = RunResult(steps=0, terminated=False)
        traces = []
        if self.i in marks:
            result.checkpoints.append((self.i, self.t, observe()))
            marks = [c for c in marks if c > self.i]
        while True:
            bound = target
            for c in marks:
                if c > self.i:
                    bound = c if bound is None else min(bound, c)
                    break
            if bound is None:
                span = chunk_size
            else:
                span = min(chunk_size, bound - self.i)
            if span <= 0:
                break
            arrs = self._run_raw(span, imask=imask)
            got = arrs[0].shape[0]
            result.steps += got
            result.iclosed_total += int(arrs[4].sum())
            if record_trace:
                traces.append(arrs)
            if self.i in marks:
                result.checkpoints.append((self.i, self.t, observe()))
                marks = [c for c in marks if c > self.i]
            if self.terminated:
                result.terminated = True
                break
            if target is not None and self.i >= target:
                break
        if record_trace:
            cat = [np.concatenate([a[k] for a in traces]) if traces
                   else np.zeros(0, np.int64) for k in range(5)]
            result.trace = {"u": cat[0], "v": cat[1], "newly_closed": cat[2],
                            "open_after": cat[3]}
            if track_set is not None:
                result.trace["iclosed"] = cat[4]
        return result

    # -- closure queries -------------------------------------------------------

    def closing_set(self, u, v):
        """All non-edge pairs xy such that some copy of the forbidden graph
        puts two of its edges on uv and xy and every other edge in the
        current graph.  Includes pairs that are already closed; the engine
        ignores those silently when applying a step."""
        x, y = min(u, v), max(u, v)
        self._check_pair(x, y)
        if self.has_edge(x, y):
            raise ValueError(f"({u},{v}) is already an edge")
        cnt, pos, cpos, dpos, cdready, nv = self._plan
        got = K.closure_scan(self.edge_bits, self.closed_bits, self.n, self.nw,
                             x, y, cnt, pos, cpos, dpos, cdready, nv,
                             self._bufx, self._bufy)
        if got < 0:
            raise RuntimeError("closure candidate buffer overflow")
        return {(min(a, b), max(a, b))
                for a, b in zip(self._bufx[:got].tolist(),
                                self._bufy[:got].tolist())}

    # -- verification oracle ---------------------------------------------------

    def oracle_closed_matrix(self):
        """Recompute every pair's closed status from scratch with a search
        independent of the incremental bookkeeping.  Raises if the current
        edge graph contains the forbidden graph."""
        if self._oracle_plan is None:
            self._oracle_plan = anchor_plan(self.h.graph)
        cnt, pos, nv = self._oracle_plan
        if K.graph_contains(self.edge_bits, self.n, self.nw, cnt, pos, nv):
            raise RuntimeError("invariant violated: the graph contains a "
                               "copy of the forbidden graph")
        return K.oracle_closed_matrix(self.edge_bits, self.n, self.nw,
                                      cnt, pos, nv)

    def verify_against_oracle(self):
        """Check the incremental closed matrix against the oracle; raises
        AssertionError on any disagreement."""
        oracle = self.oracle_closed_matrix()
        if not np.array_equal(oracle, self.closed_bits):
            diff = np.argwhere(oracle != self.closed_bits)
            raise AssertionError(
                f"closed-status mismatch in {diff.shape[0]} bit words; "
                f"first at row {int(diff[0][0])}")
        return True
