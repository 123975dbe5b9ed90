import itertools
import json
import subprocess
import sys

import pytest

from palettesparse.cli import ConfigError, RunConfig, run, sweep_success_vs_s
from palettesparse.cover import ListAssignment, random_cover, save_cover
from palettesparse.graphcore import Graph, gen_locally_sparse, save_graph
from palettesparse.nibble import verify_coloring
from palettesparse.nibble import PartialColoring


def base_config(**over):
    d = {
        "instance": {"kind": "gen", "n": 30, "delta": 5, "k": 2, "seed": 1},
        "pipeline": "plain",
        "model": "offline",
        "alpha": 0.5,
        "gamma": 0.1,
        "epsilon": 1.0,
        "q_override": 6,
        "s_override": 4,
        "seeds": list(range(10)),
    }
    d.update(over)
    return RunConfig.from_dict(d)


class TestRunConfig:
    def test_schema_checked(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"schema": "other/9", "instance": {}, "seeds": [1]})

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"instance": {}, "seeds": [1], "bogus": 2})

    def test_roundtrip(self):
        cfg = base_config()
        again = RunConfig.from_dict(cfg.to_dict())
        assert again.to_dict() == cfg.to_dict()


class TestRun:
    def test_rows_and_aggregates_consistent(self):
        res = run(base_config())
        assert len(res.rows) == 10
        agg = res.aggregates()
        assert agg["runs"] == 10
        assert agg["successes"] == sum(1 for r in res.rows if r.success)
        assert agg["success_rate"] == agg["successes"] / 10

    def test_rerun_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run(base_config(out_dir=str(out1)))
        run(base_config(out_dir=str(out2)))
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_stored_colorings_reverify(self, tmp_path):
        out = tmp_path / "runs"
        cfg = base_config(out_dir=str(out))
        res = run(cfg)
        g = gen_locally_sparse(30, 5, 2, seed=1)
        full = ListAssignment(tuple(tuple(range(6)) for _ in range(30)))
        for row in res.rows:
            if row.success:
                data = json.loads((out / f"coloring_seed{row.seed}.json").read_text())
                phi = PartialColoring({int(v): c for v, c in data.items()})
                assert verify_coloring(g, full, phi).ok

    def test_query_cover_combination_unsupported(self):
        cfg = base_config(model="query", pipeline="cover", cover_size=6,
                          seeds=[0, 1])
        res = run(cfg)
        assert all(not r.success for r in res.rows)
        assert all("unsupported" in r.error for r in res.rows)
        assert res.exit_code == 2

    def test_stream_model_records_peak_words(self):
        cfg = base_config(model="stream", seeds=[0, 1, 2])
        res = run(cfg)
        assert all(r.resource is not None and r.resource > 0 for r in res.rows)

    def test_list_and_cover_pipelines(self):
        for pipeline in ("list", "cover"):
            cfg = base_config(pipeline=pipeline, seeds=[0, 1, 2], cover_size=6,
                              q_override=None, s_override=4)
            res = run(cfg)
            assert len(res.rows) == 3


class TestSweepSuccessVsS:
    def test_s_equals_q_matches_full_list_offline(self):
        # sampling the whole palette is the identity, so the success rate at
        # s = q equals the plain offline rate on full lists
        cfg = base_config(seeds=list(range(8)))
        table = sweep_success_vs_s(cfg, [6])
        full = run(base_config(seeds=list(range(8)), s_override=6))
        assert table["table"][0]["success_rate"] == full.aggregates()["success_rate"]

    def test_triangle_tiny_sample_matches_enumeration(self, tmp_path):
        # oracle: enumerate all 2^3 single-color samples of a triangle with
        # palette {0, 1}; a sample admits a proper coloring only if all three
        # forced colors are pairwise distinct, which cannot happen with two
        # colors, so every outcome is uncolorable
        colorable = 0
        for combo in itertools.product((0, 1), repeat=3):
            if combo[0] != combo[1] and combo[0] != combo[2] and combo[1] != combo[2]:
                colorable += 1
        assert colorable == 0

        path = tmp_path / "k3.txt"
        save_graph(Graph(3, [(0, 1), (0, 2), (1, 2)]), path)
        cfg = RunConfig.from_dict({
            "instance": {"kind": "file", "path": str(path), "k": 1},
            "pipeline": "plain",
            "model": "offline",
            "epsilon": 1.0,
            "q_override": 2,
            "seeds": list(range(24)),
        })
        table = sweep_success_vs_s(cfg, [1, 2])
        rate_s1 = table["table"][0]["success_rate"]
        assert rate_s1 < 1.0
        assert rate_s1 == colorable / 8
        assert "monotone_nondecreasing" in table

    def test_rates_reported_per_s(self):
        cfg = base_config(seeds=list(range(6)))
        table = sweep_success_vs_s(cfg, [2, 4, 6])
        assert [t["s"] for t in table["table"]] == [2, 4, 6]


class TestCliCommands:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "palettesparse.cli", *args],
            capture_output=True, text=True,
        )

    def test_gen_and_sparsify_and_solve(self, tmp_path):
        gpath = tmp_path / "g.txt"
        out = self._run("gen", "--n", "20", "--delta", "4", "--k", "1",
                        "--seed", "2", "--out", str(gpath))
        assert out.returncode == 0 and gpath.exists()

        pal = tmp_path / "pal.txt"
        out = self._run("sparsify", "--graph", str(gpath), "--epsilon", "1.0",
                        "--seed", "1", "--out", str(pal))
        assert out.returncode == 0
        assert "|" in pal.read_text().splitlines()[0]

        lists = tmp_path / "lists.txt"
        lists.write_text("20\n" + "\n".join("0 1 2 3 4" for _ in range(20)) + "\n")
        report = tmp_path / "report.json"
        out = self._run("solve", "--graph", str(gpath), "--lists", str(lists),
                        "--seed", "0", "--report", str(report))
        assert out.returncode == 0
        rep = json.loads(report.read_text())
        assert rep["success"] and rep["coloring"]

    def test_verify_cover_command(self, tmp_path):
        g = gen_locally_sparse(12, 3, 1, seed=5)
        gpath = tmp_path / "g.txt"
        save_graph(g, gpath)
        cov = random_cover(g, 3, 0.5, seed=2)
        cpath = tmp_path / "c.txt"
        save_cover(cov, cpath)
        out = self._run("verify-cover", "--graph", str(gpath), "--cover", str(cpath))
        assert out.returncode == 0 and "pass" in out.stdout

    def test_stream_and_queries_commands(self, tmp_path):
        g = gen_locally_sparse(25, 4, 1, seed=3)
        gpath = tmp_path / "g.txt"
        save_graph(g, gpath)
        ledger = tmp_path / "ledger.csv"
        out = self._run("stream", "--graph", str(gpath), "--epsilon", "1.0",
                        "--seed", "1", "--ledger", str(ledger))
        assert out.returncode == 0
        assert "peak_words" in ledger.read_text()
        counts = tmp_path / "counts.csv"
        out = self._run("queries", "--graph", str(gpath), "--epsilon", "1.0",
                        "--strategy", "auto", "--seed", "1", "--out", str(counts))
        assert out.returncode == 0
        assert "total" in counts.read_text()

    def test_sweep_command_and_exit_codes(self, tmp_path):
        cfgpath = tmp_path / "cfg.json"
        cfgpath.write_text(json.dumps({
            "instance": {"kind": "gen", "n": 20, "delta": 4, "k": 1, "seed": 1},
            "pipeline": "plain", "model": "offline", "epsilon": 1.0,
            "q_override": 5, "s_override": 3, "seeds": [0, 1, 2],
            "out_dir": str(tmp_path / "out"),
        }))
        out = self._run("sweep", "--config", str(cfgpath))
        assert out.returncode in (0, 2)
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schema": "nope/0", "instance": {}, "seeds": [1]}))
        out = self._run("sweep", "--config", str(bad))
        assert out.returncode == 3
