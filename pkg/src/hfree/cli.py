"""Command line front end: graph analysis, process runs, extension tracking,
subgraph census, exponent fits, and trajectory tables.

Configuration is flat key=value text overridable by flags; every output file
carries a header block with the config hash, seed, and constants.  Exit
codes: 0 success, 2 validation failure, 3 runtime or IO failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from pathlib import Path

from .analysis import exponent_fit, subgraph_census
from .extensions import Tracker, build_catalogue, parse_pattern
from .graphs import (GraphFormatError, automorphism_count, classify_pair,
                     extension_series, forbidden_graph,
                     graph_from_spec_string, is_strictly_two_balanced,
                     p_exponent, pair_scaling_exponent)
from .process import ProcessState
from .trajectory import TrajectoryParams, c_of_t, envelope, q_of_t, x_of_t


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_CONFIG_KEYS = ("h", "n", "seeds", "mu", "epsilon", "W", "V", "steps",
                "to_termination", "checkpoints", "patterns", "out")


def load_config(path):
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        cfg[key] = value.strip()
    return cfg


def merge_config(args):
    """Config file values overridden by any explicitly passed flags."""
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            cfg[key] = flag
    if "h" not in cfg:
        raise ValueError("no forbidden graph given (--h or config)")
    if "n" not in cfg:
        raise ValueError("no vertex count given (--n or config)")
    return cfg


def config_hash(cfg):
    # the output directory does not change the run, keep it out of the hash
    text = "".join(f"{k}={cfg[k]}\n" for k in sorted(cfg) if k != "out")
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _parse_seeds(value):
    if value is None:
        return [0]
    if isinstance(value, list):
        return [int(s) for s in value]
    return [int(s) for s in str(value).split(",") if s.strip()]


def _parse_grid(value, params):
    if value is None:
        # default checkpoint grid 0.1, 0.2, ... up to t_max
        k = max(1, int(params.t_max / 0.1))
        return [round(0.1 * j, 10) for j in range(1, k + 1)]
    return [float(x) for x in str(value).split(",") if x.strip()]


def _setup(cfg):
    h = forbidden_graph(graph_from_spec_string(cfg["h"]))
    n = int(cfg["n"])
    params = TrajectoryParams(
        h, n,
        mu=float(cfg.get("mu", 0.1)),
        epsilon=float(cfg.get("epsilon", 0.01)),
        W=float(cfg.get("W", 10.0)),
        V=float(cfg.get("V", 0.0)))
    to_term = cfg.get("to_termination")
    if isinstance(to_term, str):
        to_term = to_term.lower() in ("1", "true", "yes")
    if to_term:
        steps = None
    elif cfg.get("steps") is not None:
        steps = int(cfg["steps"])
    else:
        steps = params.m
    return h, n, params, steps


def _header(cfg, params, seed):
    lines = [f"# config_hash={config_hash(cfg)}", f"# seed={seed}"]
    lines += [f"# {k}={v}" for k, v in (
        ("h", cfg["h"]), ("n", params.n), ("mu", params.mu),
        ("epsilon", params.epsilon), ("W", params.W), ("V", params.V),
        ("rho", params.rho), ("s", params.s), ("m", params.m))]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args):
    g = graph_from_spec_string(args.graph)
    print(f"vertices: {g.vertex_count}")
    print(f"edges: {g.edge_count}")
    print(f"automorphisms: {automorphism_count(g)}")
    balanced = is_strictly_two_balanced(g)
    print(f"strictly 2-balanced: {'yes' if balanced else 'no'}")
    if not balanced:
        return 0
    print(f"p-exponent: -{p_exponent(g)}")
    if args.gamma:
        h = forbidden_graph(g)
        gamma = graph_from_spec_string(args.gamma)
        anchor = tuple(int(x) for x in args.anchor.split(",")) if args.anchor else ()
        cls = classify_pair(h, (gamma, anchor))
        print(f"pair scaling exponent: {pair_scaling_exponent(h, gamma, anchor)}")
        print(f"strictly balanced: {'yes' if cls.strictly_balanced else 'no'}")
        print(f"dense: {'yes' if cls.dense else 'no'}")
        print(f"strictly dense: {'yes' if cls.strictly_dense else 'no'}")
        series = extension_series(h, (gamma, anchor))
        sets = " -> ".join("{" + ",".join(map(str, b)) + "}" for b in series.sets)
        print(f"extension series: {sets}")
        print(f"step exponents: [{', '.join(str(e) for e in series.step_exponents)}]")
    return 0


def _out_dir(cfg):
    out = Path(cfg.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args):
    cfg = merge_config(args)
    h, n, params, steps = _setup(cfg)
    seeds = _parse_seeds(cfg.get("seeds"))
    out = _out_dir(cfg)
    summary = {"h": cfg["h"], "n": n, "seeds": seeds, "mu": params.mu,
               "epsilon": params.epsilon, "W": params.W, "V": params.V,
               "m": params.m, "s": params.s, "runs": []}
    for seed in seeds:
        t0 = time.time()
        state = ProcessState(h, n, seed=seed)
        res = state.run(max_steps=steps, record_trace=True)
        tr = res.trace
        path = out / f"trace_seed{seed}.csv"
        with open(path, "w") as fh:
            fh.write(_header(cfg, params, seed))
            fh.write("i,t,open_pairs,newly_closed,edge_u,edge_v\n")
            for k in range(res.steps):
                i = k + 1
                fh.write(f"{i},{state.time_of(i):.10g},{tr['open_after'][k]},"
                         f"{tr['newly_closed'][k]},{tr['u'][k]},{tr['v'][k]}\n")
        ds = state.degrees()
        q_pred = q_of_t(params, state.t) * n * n
        summary["runs"].append({
            "seed": seed, "final_i": state.i, "final_t": state.t,
            "terminated": res.terminated,
            "open_pairs": state.open_pairs,
            "q_residual": state.q / q_pred - 1.0 if q_pred > 0 else None,
            "degrees": {"min": int(ds.min()), "max": int(ds.max()),
                        "mean": float(ds.mean())},
            "wall_seconds": round(time.time() - t0, 3)})
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_track(args):
    cfg = merge_config(args)
    h, n, params, steps = _setup(cfg)
    seeds = _parse_seeds(cfg.get("seeds"))
    out = _out_dir(cfg)
    extra = []
    for path in str(cfg.get("patterns", "")).split(","):
        if path.strip():
            p = Path(path.strip())
            extra.append(parse_pattern(p.read_text(), name=p.stem))
    catalogue = build_catalogue(h, extra_patterns=extra)
    grid = _parse_grid(cfg.get("checkpoints"), params)
    for seed in seeds:
        state = ProcessState(h, n, seed=seed)
        tracker = Tracker(h, n, params=params, catalogue=catalogue,
                          panel_seed=seed)
        cps = sorted(set(state.step_of(t) for t in grid))
        res = state.run(max_steps=max(cps) if steps is None else steps,
                        checkpoints=cps, observers=[tracker])
        path = out / f"track_seed{seed}.csv"
        with open(path, "w") as fh:
            fh.write(_header(cfg, params, seed))
            fh.write("i,t,pattern,anchor,observed,predicted,env_lo,env_hi,"
                     "trackable\n")
            for (_, _, (samples,)) in res.checkpoints:
                for sm in samples:
                    fh.write(f"{sm.i},{sm.t:.10g},{sm.pattern},{sm.anchor_id},"
                             f"{sm.observed},{sm.predicted:.10g},"
                             f"{sm.env_lo:.10g},{sm.env_hi:.10g},"
                             f"{int(sm.trackable)}\n")
    return 0


def _split_graph_list(value):
    """Split a comma list of graph specs, keeping bipartite presets like
    K2,3 intact: a bare integer token is glued to a preceding K token."""
    out = []
    for tok in (t.strip() for t in value.split(",") if t.strip()):
        if out and tok.isdigit() and re.fullmatch(r"K\d+", out[-1]):
            out[-1] += "," + tok
        else:
            out.append(tok)
    return out


def cmd_census(args):
    cfg = merge_config(args)
    h, n, params, steps = _setup(cfg)
    seeds = _parse_seeds(cfg.get("seeds"))
    out = _out_dir(cfg)
    if not args.gamma:
        raise ValueError("census requires at least one --gamma")
    gammas = [(spec, graph_from_spec_string(spec))
              for spec in _split_graph_list(args.gamma)]
    grid = _parse_grid(cfg.get("checkpoints"), params)
    for seed in seeds:
        state = ProcessState(h, n, seed=seed)
        cps = sorted(set(state.step_of(t) for t in grid))

        def observe(st):
            return [(label, subgraph_census(st, g)) for label, g in gammas]

        res = state.run(max_steps=max(cps) if steps is None else steps,
                        checkpoints=cps, observers=[observe])
        path = out / f"census_seed{seed}.csv"
        with open(path, "w") as fh:
            fh.write(_header(cfg, params, seed))
            fh.write("i,t,gamma,observed,predicted,regime\n")
            for (i, t, (rows,)) in res.checkpoints:
                for label, rep in rows:
                    fh.write(f"{i},{t:.10g},{label},{rep.observed},"
                             f"{rep.predicted:.10g},{rep.regime}\n")
    return 0


def cmd_fit(args):
    points = []
    for lineno, raw in enumerate(Path(args.input).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.lower().startswith("n,"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{args.input}:{lineno}: expected n,value")
        points.append((int(parts[0]), float(parts[1])))
    fit = exponent_fit(points, polylog_exponent=args.polylog)
    print(f"points: {len(points)}")
    print(f"slope: {fit.slope:.6f}")
    print(f"intercept: {fit.intercept:.6f}")
    print(f"r_squared: {fit.r_squared:.6f}")
    return 0


def cmd_traj(args):
    cfg = merge_config(args)
    h, n, params, _ = _setup(cfg)
    catalogue = build_catalogue(h)
    t_hi = args.tmax if args.tmax else params.t_max
    pts = args.points
    out_path = Path(cfg.get("out", ".")) / "traj.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    names = [pat.name for pat in catalogue]
    with open(out_path, "w") as fh:
        fh.write(_header(cfg, params, seed="-"))
        fh.write("t,q,c," + ",".join(f"x_{nm}" for nm in names)
                 + ",env_lo,env_hi\n")
        for k in range(1, pts + 1):
            t = t_hi * k / pts
            q = q_of_t(params, t)
            xs = [x_of_t(params, pat, t) for pat in catalogue]
            lo, hi = envelope(params, t, 0, q)
            fh.write(f"{t:.10g},{q:.10g},{c_of_t(params, t):.10g},"
                     + ",".join(f"{x:.10g}" for x in xs)
                     + f",{lo:.10g},{hi:.10g}\n")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--h", help="forbidden graph preset or file")
    sub.add_argument("--n", type=int, help="vertex count")
    sub.add_argument("--seed", dest="seeds", help="seed (alias for --seeds)")
    sub.add_argument("--seeds", dest="seeds", help="comma-separated seeds")
    sub.add_argument("--mu", type=float)
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--W", type=float)
    sub.add_argument("--V", type=float)
    sub.add_argument("--steps", type=int, help="stop after this many steps")
    sub.add_argument("--to-termination", dest="to_termination",
                     action="store_true", default=None)
    sub.add_argument("--checkpoints", help="comma-separated t values")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--log-closures", dest="log_closures",
                     action="store_true", default=None,
                     help="keep per-step closure detail in memory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hfree",
        description="H-free random graph process simulator and verifier")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("analyze", help="classify a graph")
    p.add_argument("graph", help="preset (K<s>, C<l>, K<r>,<s>) or file path")
    p.add_argument("--gamma", help="pattern graph for pair classification")
    p.add_argument("--anchor", help="comma-separated anchor vertices")
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("run", help="run the process, write traces")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("track", help="track extension variables")
    _add_common(p)
    p.add_argument("--patterns", help="comma-separated pattern files")
    p.set_defaults(func=cmd_track)

    p = subs.add_parser("census", help="subgraph census at checkpoints")
    _add_common(p)
    p.add_argument("--gamma", help="comma-separated census graphs")
    p.set_defaults(func=cmd_census)

    p = subs.add_parser("fit", help="log-log exponent fit of n,value CSV")
    p.add_argument("input", help="CSV file with rows n,value")
    p.add_argument("--polylog", type=float, default=0.0,
                   help="divide values by (log n)^this before fitting")
    p.set_defaults(func=cmd_fit)

    p = subs.add_parser("traj", help="closed-form trajectory table")
    _add_common(p)
    p.add_argument("--tmax", type=float, help="grid upper end (default t_max)")
    p.add_argument("--points", type=int, default=100)
    p.set_defaults(func=cmd_traj)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
