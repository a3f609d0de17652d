"""End-to-end command line tests driven through main() with tmp_path
output directories."""
import json

import pytest

from hfree.cli import config_hash, load_config, main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestAnalyze:
    def test_balanced_preset(self, capsys):
        code, out, _ = run_cli(["analyze", "K4"], capsys)
        assert code == 0
        assert "vertices: 4" in out
        assert "edges: 6" in out
        assert "automorphisms: 24" in out
        assert "strictly 2-balanced: yes" in out
        assert "p-exponent: -2/5" in out

    def test_unbalanced_stops_early(self, capsys):
        code, out, _ = run_cli(["analyze", "K1,3"], capsys)
        assert code == 0
        assert "strictly 2-balanced: no" in out
        assert "p-exponent" not in out

    def test_pair_classification(self, capsys):
        code, out, _ = run_cli(
            ["analyze", "K3", "--gamma", "K3", "--anchor", "0,1"], capsys)
        assert code == 0
        assert "pair scaling exponent: 0" in out
        assert "strictly balanced: yes" in out
        assert "dense: yes" in out
        assert "extension series: {0,1} -> {0,1,2}" in out

    def test_bad_graph_exits_2(self, capsys):
        code, _, err = run_cli(["analyze", "K99,"], capsys)
        assert code == 2
        assert "error" in err


class TestRun:
    def test_tiny_run_terminates(self, tmp_path, capsys):
        # n = order of the forbidden graph: two edges close everything
        code, _, _ = run_cli(
            ["run", "--h", "K3", "--n", "3", "--to-termination",
             "--out", str(tmp_path)], capsys)
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        run = summary["runs"][0]
        assert run["final_i"] == 2 and run["terminated"]
        trace = (tmp_path / "trace_seed0.csv").read_text()
        assert trace.startswith("# config_hash=")
        body = [l for l in trace.splitlines() if not l.startswith("#")]
        assert body[0] == "i,t,open_pairs,newly_closed,edge_u,edge_v"
        assert len(body) == 3

    def test_reruns_byte_identical(self, tmp_path, capsys):
        argv = ["run", "--h", "C4", "--n", "64", "--seeds", "5",
                "--steps", "100"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(argv + ["--out", str(a)], capsys)[0] == 0
        assert run_cli(argv + ["--out", str(b)], capsys)[0] == 0
        assert (a / "trace_seed5.csv").read_bytes() == \
               (b / "trace_seed5.csv").read_bytes()

    def test_multiple_seeds(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["run", "--h", "K3", "--n", "32", "--seeds", "1,2",
             "--steps", "30", "--out", str(tmp_path)], capsys)
        assert code == 0
        assert (tmp_path / "trace_seed1.csv").exists()
        assert (tmp_path / "trace_seed2.csv").exists()
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert [r["seed"] for r in summary["runs"]] == [1, 2]

    def test_unbalanced_forbidden_graph_exits_2(self, tmp_path, capsys):
        # a path has a degree-1 vertex, so it is not strictly 2-balanced
        gpath = tmp_path / "p4.txt"
        gpath.write_text("v 4\ne 0 1\ne 1 2\ne 2 3\n")
        code, _, err = run_cli(
            ["run", "--h", str(gpath), "--n", "16",
             "--out", str(tmp_path)], capsys)
        assert code == 2
        assert "error" in err

    def test_missing_n_exits_2(self, capsys):
        code, _, err = run_cli(["run", "--h", "K3"], capsys)
        assert code == 2
        assert "vertex count" in err


class TestConfig:
    def test_load_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("h = K3   # forbidden graph\nn = 24\nseeds = 7\n"
                       "steps = 10\n")
        assert load_config(cfg) == {"h": "K3", "n": "24", "seeds": "7",
                                    "steps": "10"}
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        code, _, _ = run_cli(["run", "--config", str(cfg),
                              "--out", str(out1)], capsys)
        assert code == 0
        assert (out1 / "trace_seed7.csv").exists()
        # flag overrides the config seed
        code, _, _ = run_cli(["run", "--config", str(cfg), "--seeds", "9",
                              "--out", str(out2)], capsys)
        assert code == 0
        assert (out2 / "trace_seed9.csv").exists()

    def test_bad_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("h = K3\nwidth = 4\n")
        code, _, err = run_cli(["run", "--config", str(cfg), "--n", "16"],
                               capsys)
        assert code == 2
        assert "bad.cfg:2" in err

    def test_hash_is_order_independent(self):
        assert config_hash({"h": "K3", "n": "16"}) == \
               config_hash({"n": "16", "h": "K3"})
        assert config_hash({"h": "K3", "n": "16"}) != \
               config_hash({"h": "K3", "n": "32"})


class TestTrack:
    def test_track_csv(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["track", "--h", "K3", "--n", "48", "--seed", "0",
             "--checkpoints", "0.05,0.1", "--out", str(tmp_path)], capsys)
        assert code == 0
        lines = [l for l in (tmp_path / "track_seed0.csv")
                 .read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == ("i,t,pattern,anchor,observed,predicted,"
                            "env_lo,env_hi,trackable")
        names = {l.split(",")[2] for l in lines[1:]}
        assert "Q" in names and "degree" in names
        assert len(lines) > 2

    def test_user_pattern_file(self, tmp_path, capsys):
        pat = tmp_path / "wedge.txt"
        # one J-edge plus one open edge hanging off the anchor pair
        pat.write_text("v 3\ne 0 2\ne 1 2\nJ 0\nA 0 1\n")
        code, _, _ = run_cli(
            ["track", "--h", "K3", "--n", "32", "--checkpoints", "0.05",
             "--patterns", str(pat), "--out", str(tmp_path)], capsys)
        assert code == 0
        text = (tmp_path / "track_seed0.csv").read_text()
        assert "wedge" in text or "user" in text


class TestCensus:
    def test_census_csv(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["census", "--h", "K3", "--n", "40", "--gamma", "C4,K1,2",
             "--checkpoints", "0.1,0.2", "--out", str(tmp_path)], capsys)
        assert code == 0
        lines = [l for l in (tmp_path / "census_seed0.csv")
                 .read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "i,t,gamma,observed,predicted,regime"
        gammas = {l.split(",", 3)[2] for l in lines[1:]}
        assert "C4" in gammas
        regimes = {l.rsplit(",", 1)[1] for l in lines[1:]}
        assert regimes <= {"Subcritical", "Supercritical", "Critical",
                           "ContainsH"}

    def test_requires_gamma(self, capsys):
        code, _, err = run_cli(["census", "--h", "K3", "--n", "20"], capsys)
        assert code == 2
        assert "gamma" in err


class TestFit:
    def test_fit_synthetic(self, tmp_path, capsys):
        csv = tmp_path / "pts.csv"
        csv.write_text("n,value\n" + "".join(
            f"{n},{n ** 1.5}\n" for n in (128, 256, 512, 1024)))
        code, out, _ = run_cli(["fit", str(csv)], capsys)
        assert code == 0
        assert "slope: 1.500000" in out
        assert "r_squared: 1.000000" in out

    def test_missing_file_exits_3(self, capsys):
        code, _, err = run_cli(["fit", "/nonexistent/pts.csv"], capsys)
        assert code == 3
        assert "error" in err


class TestTraj:
    def test_table(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["traj", "--h", "C4", "--n", "1000", "--points", "10",
             "--out", str(tmp_path)], capsys)
        assert code == 0
        lines = [l for l in (tmp_path / "traj.csv").read_text().splitlines()
                 if not l.startswith("#")]
        header = lines[0].split(",")
        assert header[:3] == ["t", "q", "c"]
        assert header[-2:] == ["env_lo", "env_hi"]
        assert "x_Q" in header
        assert len(lines) == 11
        row = lines[1].split(",")
        # q starts near 1 and the envelope brackets it
        assert float(row[-2]) <= float(row[1]) <= float(row[-1])
