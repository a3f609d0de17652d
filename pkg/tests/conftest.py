"""Session fixtures for the acceptance suite: the large instrumented runs
are executed once and shared across criteria.  A terminal-summary hook
prints one line per acceptance criterion even when capture is on."""
import time

import numpy as np
import pytest

from hfree.analysis import open_pairs_within, subgraph_census
from hfree.graphs import parse_preset
from hfree.process import ProcessState
from hfree.trajectory import TrajectoryParams, alpha_bound, q_of_t

ACCEPTANCE_LINES = []


def record_criterion(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _grid(lo, hi, step=0.1):
    k = round(lo / step)
    out = []
    while True:
        t = round(k * step, 10)
        if t > hi + 1e-9:
            return out
        out.append(t)
        k += 1


def _instrumented_run(h_name, n, seed, t_hi, probe_sets=0,
                      census_forbidden=False):
    """Run one seed, recording Q at each 0.1-grid checkpoint plus the
    state statistics the acceptance criteria sample at t=0.5 and t=1.0."""
    h = parse_preset(h_name)
    params = TrajectoryParams(h, n)
    st = ProcessState(h, n, seed=seed)
    rec = {"seed": seed, "n": n, "q_at": {}, "wall": 0.0,
           "terminated_t": None}
    t0 = time.time()
    for t in _grid(0.1, t_hi):
        target = params.step_of(t)
        st.run(max_steps=target)
        if st.i < target:
            rec["terminated_t"] = st.t
            break
        rec["q_at"][t] = st.q
        if t == 0.5:
            degs = st.degrees().astype(np.int64)
            rec["i_05"] = st.i
            rec["cherry_05"] = int((degs * (degs - 1)).sum())
            if census_forbidden:
                rec["triangles_05"] = subgraph_census(st, h).observed
        if t == 1.0:
            degs = st.degrees()
            rec["i_10"] = st.i
            rec["median_degree_10"] = float(np.median(degs))
            if probe_sets:
                size = round(alpha_bound(params))
                rng = np.random.default_rng(seed)
                q1 = q_of_t(params, 1.0)
                ratios = []
                for _ in range(probe_sets):
                    I = rng.choice(n, size=size, replace=False)
                    ratios.append(open_pairs_within(st, I)
                                  / (q1 * size * size))
                rec["qi_ratios_10"] = ratios
    else:
        if st.terminated:
            rec["terminated_t"] = st.t
    rec["wall"] = time.time() - t0
    return rec


@pytest.fixture(scope="session")
def k3_big_runs():
    """H=K3, n=2e4, 5 seeds, checkpoints on the 0.1-grid up to t=1.4."""
    return [_instrumented_run("K3", 20_000, seed, 1.4, probe_sets=5,
                              census_forbidden=True)
            for seed in range(5)]


@pytest.fixture(scope="session")
def c4_big_runs():
    """H=C4, n=1e4, 5 seeds, checkpoints up to t=1.0."""
    return [_instrumented_run("C4", 10_000, seed, 1.0)
            for seed in range(5)]


@pytest.fixture(scope="session")
def k4_big_run():
    """H=K4, n=1e4, one seed, run to t=1.0 for common-neighbor sampling."""
    h = parse_preset("K4")
    n = 10_000
    params = TrajectoryParams(h, n)
    st = ProcessState(h, n, seed=0)
    st.run(max_steps=params.step_of(1.0))
    return st


@pytest.fixture(scope="session")
def k3_growth_runs():
    """H=K3, n = 2^10..2^14, 3 seeds each, run to i = m; records the edge
    count actually reached."""
    out = []
    t0 = time.time()
    for exp in range(10, 15):
        n = 1 << exp
        params = TrajectoryParams(parse_preset("K3"), n)
        for seed in range(3):
            st = ProcessState(parse_preset("K3"), n, seed=seed)
            st.run(max_steps=params.m)
            out.append({"n": n, "seed": seed, "m": params.m,
                        "edges": st.i, "terminated": st.terminated})
    return {"runs": out, "wall": time.time() - t0}
