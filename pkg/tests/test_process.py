"""Process-engine tests: initialization, closing sets, stepping invariants,
oracle equivalence, determinism, and sampler marginals."""
import itertools

import numpy as np
import pytest

from hfree.graphs import GraphSpec, complete_graph, contains_subgraph
from hfree.process import ProcessState, Status


def force_edges(state, edges):
    """Drive a state into a specific edge set via direct bit surgery, then
    rebuild closed pairs from the oracle (test harness only)."""
    for (u, v) in edges:
        state.edge_bits[u, v >> 6] |= np.uint64(1) << np.uint64(v & 63)
        state.edge_bits[v, u >> 6] |= np.uint64(1) << np.uint64(u & 63)
    closed = state.oracle_closed_matrix()
    state.closed_bits[:] = closed
    n_closed = int(np.bitwise_count(closed).sum()) // 2
    total = state.n * (state.n - 1) // 2
    state._meta[0] = len(edges)
    state._meta[1] = total - len(edges) - n_closed


class TestInit:
    @pytest.mark.parametrize("h,n,pairs", [
        ("K3", 4, 6), ("C4", 10, 45), ("K3", 3, 3)])
    def test_open_counts(self, h, n, pairs):
        state = ProcessState(h, n, seed=0)
        assert state.i == 0
        assert state.open_pairs == pairs
        assert state.q == 2 * pairs

    def test_n_too_small(self):
        with pytest.raises(ValueError):
            ProcessState("K3", 2, seed=0)
        with pytest.raises(ValueError):
            ProcessState("C5", 4, seed=0)

    def test_fresh_oracle_all_open(self):
        state = ProcessState("K4", 12, seed=0)
        assert not state.oracle_closed_matrix().any()


class TestClosingSet:
    def test_spec_examples(self):
        # vertices relabeled to 0-base: edges {01, 12} on 4 vertices
        state = ProcessState("K3", 4, seed=0)
        force_edges(state, [(0, 1), (1, 2)])
        assert state.closing_set(0, 3) == {(1, 3)}
        assert state.closing_set(1, 3) == {(0, 3), (2, 3)}

    def test_empty_graph(self):
        for h in ("K3", "K4", "C4"):
            state = ProcessState(h, 8, seed=0)
            assert state.closing_set(0, 1) == set()

    def test_edge_rejected(self):
        state = ProcessState("K3", 5, seed=0)
        rec = state.step()
        with pytest.raises(ValueError):
            state.closing_set(rec.u, rec.v)

    def test_includes_already_closed(self):
        # edges {01, 12, 23}: pair 02 is closed; adding 03 re-implies
        # nothing, but adding 13 would close 03 (and 23 is an edge)
        state = ProcessState("K3", 4, seed=0)
        force_edges(state, [(0, 1), (1, 2), (2, 3)])
        assert state.is_closed(0, 2) and state.is_closed(1, 3)
        cs = state.closing_set(0, 3)
        assert cs == {(0, 2), (1, 3)}   # both already closed, still reported


class TestStep:
    def test_k3_n3_always_two_steps(self):
        for seed in range(40):
            state = ProcessState("K3", 3, seed=seed)
            recs = []
            while True:
                rec = state.step()
                if rec is None:
                    break
                recs.append(rec)
            assert len(recs) == 2
            assert recs[1].open_after == 0

    def test_record_invariant(self):
        state = ProcessState("C4", 20, seed=5)
        prev_open = state.open_pairs
        while True:
            rec = state.step()
            if rec is None:
                break
            assert rec.open_after == prev_open - 1 - rec.newly_closed
            prev_open = rec.open_after

    def test_monotone_and_h_free(self):
        h = complete_graph(4)
        state = ProcessState(h, 18, seed=11)
        prev_closed = state.closed_bits.copy()
        while True:
            rec = state.step()
            if rec is None:
                break
            assert np.all((prev_closed & state.closed_bits) == prev_closed)
            prev_closed = state.closed_bits.copy()
            assert state.i == rec.i
        assert not contains_subgraph(GraphSpec(18, tuple(state.edges())), h)

    def test_terminated_state_is_maximal(self):
        state = ProcessState("K3", 16, seed=2)
        state.run()
        assert state.terminated
        for x in range(16):
            for y in range(x + 1, 16):
                assert state.status(x, y) in (Status.EDGE, Status.CLOSED)


class TestOracle:
    @pytest.mark.parametrize("h", ["K3", "K4", "C4", "C5"])
    def test_every_step(self, h):
        for seed in (0, 1):
            state = ProcessState(h, 20, seed=seed)
            while state.step() is not None:
                assert state.verify_against_oracle()

    def test_violation_detected(self):
        state = ProcessState("K3", 6, seed=0)
        # force a triangle into the adjacency without bookkeeping
        for (u, v) in ((0, 1), (1, 2), (0, 2)):
            state.edge_bits[u, 0] |= np.uint64(1) << np.uint64(v)
            state.edge_bits[v, 0] |= np.uint64(1) << np.uint64(u)
        with pytest.raises(RuntimeError):
            state.oracle_closed_matrix()


class TestRun:
    def test_zero_steps(self):
        state = ProcessState("K3", 10, seed=0)
        res = state.run(max_steps=0, record_trace=True)
        assert res.steps == 0 and state.i == 0
        assert res.trace["u"].shape == (0,)

    def test_until_termination_k3_n3(self):
        state = ProcessState("K3", 3, seed=9)
        res = state.run(record_trace=True)
        assert res.terminated and res.steps == 2

    def test_checkpoints_and_observers(self):
        state = ProcessState("K3", 30, seed=1)
        res = state.run(max_steps=40, checkpoints=[0, 10, 25],
                        observers=[lambda st: st.i, lambda st: st.open_pairs])
        assert [c[0] for c in res.checkpoints] == [0, 10, 25]
        for (i, t, (obs_i, obs_open)) in res.checkpoints:
            assert obs_i == i

    def test_observer_failure_names_step(self):
        state = ProcessState("K3", 30, seed=1)

        def bad(st):
            raise KeyError("boom")

        with pytest.raises(RuntimeError, match="step 10"):
            state.run(max_steps=20, checkpoints=[10], observers=[bad])

    def test_trace_matches_step_replay(self):
        res = ProcessState("C4", 15, seed=4).run(max_steps=30,
                                                 record_trace=True)
        replay = ProcessState("C4", 15, seed=4)
        for k in range(res.steps):
            rec = replay.step()
            assert (rec.u, rec.v) == (res.trace["u"][k], res.trace["v"][k])
            assert rec.newly_closed == res.trace["newly_closed"][k]


class TestDeterminism:
    @pytest.mark.parametrize("h,n", [("K3", 25), ("C4", 25)])
    def test_identical_runs(self, h, n):
        a = ProcessState(h, n, seed=123).run(record_trace=True)
        b = ProcessState(h, n, seed=123).run(record_trace=True)
        for key in a.trace:
            assert np.array_equal(a.trace[key], b.trace[key])

    def test_seed_changes_trace(self):
        a = ProcessState("K3", 25, seed=1).run(record_trace=True)
        b = ProcessState("K3", 25, seed=2).run(record_trace=True)
        assert not (np.array_equal(a.trace["u"], b.trace["u"])
                    and np.array_equal(a.trace["v"], b.trace["v"]))


class TestSamplerMarginal:
    @pytest.mark.parametrize("sampler", ["rejection", "explicit"])
    def test_first_step_uniform_chi_square(self, sampler):
        # the first chosen pair must be uniform over all 28 pairs at n=8;
        # chi-square threshold 55.48 is the 0.001 tail at df=27
        n, trials = 8, 100_000
        counts = {}
        for seed in range(trials):
            state = ProcessState("K3", n, seed=seed, sampler=sampler)
            rec = state.step()
            counts[(rec.u, rec.v)] = counts.get((rec.u, rec.v), 0) + 1
        assert len(counts) == 28
        expected = trials / 28
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 < 55.48, f"{sampler}: chi2={chi2:.1f}"

    def test_explicit_backend_runs_to_termination(self):
        a = ProcessState("K3", 20, seed=7, sampler="explicit")
        res = a.run()
        assert res.terminated
        assert a.verify_against_oracle()
