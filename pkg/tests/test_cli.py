"""End-to-end checks for the lotus command line driver."""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from lotusfilter import (
    FilterParams,
    TrainConfig,
    build_cutoff_table,
    build_index,
    clustering_baseline,
    cost_f,
    deserialize,
    gmm_baseline,
    load_binary,
    load_queries,
    search_and_filter,
    train_epsilon,
)
from lotusfilter.cli import main
from lotusfilter.dataset import QuerySet
from lotusfilter.report import file_sha256


def _gen(tmp_path, seed=3, clusters=4, per_cluster=10, dim=3, n_queries=8):
    tmp_path.mkdir(parents=True, exist_ok=True)
    base = tmp_path / "base.lvec"
    queries = tmp_path / "queries.lvec"
    rc = main(
        [
            "gen",
            "--base", str(base),
            "--queries", str(queries),
            "--clusters", str(clusters),
            "--per-cluster", str(per_cluster),
            "--dim", str(dim),
            "--spread", "0.05",
            "--n-queries", str(n_queries),
            "--seed", str(seed),
        ]
    )
    assert rc == 0
    return base, queries


def _build(tmp_path, base, eps):
    table = tmp_path / "table.lotf"
    rc = main(["build", "--base", str(base), "--table", str(table), "--eps", str(eps)])
    assert rc == 0
    return table


class TestGen:
    def test_writes_loadable_files_and_manifest(self, tmp_path):
        base = tmp_path / "b.lvec"
        queries = tmp_path / "q.lvec"
        out = tmp_path / "gen.json"
        rc = main(
            [
                "gen", "--base", str(base), "--queries", str(queries),
                "--clusters", "3", "--per-cluster", "5", "--dim", "4",
                "--n-queries", "6", "--seed", "9", "--out", str(out),
            ]
        )
        assert rc == 0
        ds = load_binary(base)
        qs = load_queries(queries)
        assert (ds.n_vectors, ds.dim) == (15, 4)
        assert (qs.n_queries, qs.dim) == (6, 4)
        doc = json.loads(out.read_text())
        assert doc["manifest"]["command"] == "gen"
        assert doc["manifest"]["seed"] == 9
        assert doc["manifest"]["inputs"]["base"]["sha256"] == file_sha256(base)
        assert doc["manifest"]["inputs"]["queries"]["sha256"] == file_sha256(queries)
        assert doc["params"]["clusters"] == 3

    def test_deterministic_per_seed(self, tmp_path):
        b1, q1 = _gen(tmp_path / "a", seed=5)
        b2, q2 = _gen(tmp_path / "b", seed=5)
        b3, _ = _gen(tmp_path / "c", seed=6)
        assert b1.read_bytes() == b2.read_bytes()
        assert q1.read_bytes() == q2.read_bytes()
        assert b1.read_bytes() != b3.read_bytes()

    def test_unwritable_path_is_runtime_error(self, tmp_path):
        # gen does not create parent directories
        rc = main(
            ["gen", "--base", str(tmp_path / "no/x.lvec"),
             "--queries", str(tmp_path / "no/y.lvec"),
             "--clusters", "2", "--per-cluster", "3", "--dim", "2"]
        )
        assert rc == 1


class TestBuild:
    def test_fixed_eps(self, tmp_path):
        base, _ = _gen(tmp_path)
        out = tmp_path / "build.json"
        table_path = tmp_path / "t.lotf"
        rc = main(
            ["build", "--base", str(base), "--table", str(table_path),
             "--eps", "0.02", "--out", str(out)]
        )
        assert rc == 0
        table = deserialize(table_path)
        assert table.epsilon == 0.02
        ds = load_binary(base)
        want = build_cutoff_table(build_index(ds), ds, 0.02)
        assert [lst.tolist() for lst in table.lists] == [
            lst.tolist() for lst in want.lists
        ]
        doc = json.loads(out.read_text())
        assert doc["stats"]["n_vectors"] == ds.n_vectors
        assert doc["stats"]["eps"] == 0.02
        assert doc["stats"]["memory_bits"] == table.memory_bits()
        assert doc["stats"]["total_entries"] == table.total_entries()
        assert "train" not in doc

    def test_trained(self, tmp_path):
        base, _ = _gen(tmp_path, per_cluster=15)
        out = tmp_path / "build.json"
        table_path = tmp_path / "t.lotf"
        rc = main(
            ["build", "--base", str(base), "--table", str(table_path), "--train",
             "--lambda", "0.4", "--s", "10", "--k", "4",
             "--eps-max", "1.0", "--train-queries", "20", "--out", str(out)]
        )
        assert rc == 0
        ds = load_binary(base)
        index = build_index(ds)
        cfg = TrainConfig(1.0, 0.4, 10, 4)
        want = train_epsilon(QuerySet(ds.data[:20]), index, ds, cfg)
        doc = json.loads(out.read_text())
        assert doc["train"]["eps_star"] == want.eps_star
        assert doc["train"]["f_star"] == want.f_star
        assert deserialize(table_path).epsilon == want.eps_star

    def test_usage_errors(self, tmp_path):
        base, _ = _gen(tmp_path)
        t = str(tmp_path / "t.lotf")
        # neither --eps nor --train
        assert main(["build", "--base", str(base), "--table", t]) == 2
        # --train without the objective parameters
        assert main(["build", "--base", str(base), "--table", t, "--train"]) == 2

    def test_missing_base_file(self, tmp_path):
        rc = main(
            ["build", "--base", str(tmp_path / "nope.lvec"),
             "--table", str(tmp_path / "t.lotf"), "--eps", "0.5"]
        )
        assert rc == 1


class TestTrainCommand:
    def test_json_matches_library(self, tmp_path):
        base, _ = _gen(tmp_path, per_cluster=15)
        out = tmp_path / "train.json"
        rc = main(
            ["train", "--base", str(base), "--lambda", "0.3", "--s", "12",
             "--k", "5", "--eps-max", "0.8", "--train-queries", "25",
             "--out", str(out)]
        )
        assert rc == 0
        ds = load_binary(base)
        want = train_epsilon(
            QuerySet(ds.data[:25]), build_index(ds), ds, TrainConfig(0.8, 0.3, 12, 5)
        )
        doc = json.loads(out.read_text())
        assert doc["result"]["eps_star"] == want.eps_star
        assert doc["result"]["f_star"] == want.f_star
        trace = doc["result"]["trace"]
        assert [len(r["grid"]) for r in trace] == [11, 11, 11, 11, 101]
        assert [r["round"] for r in trace] == [0, 1, 2, 3, 4]
        assert doc["params"]["width_schedule"] == [10, 10, 10, 10, 100]

    def test_bad_lambda_is_argparse_error(self, tmp_path):
        base, _ = _gen(tmp_path)
        with pytest.raises(SystemExit) as exc:
            main(["train", "--base", str(base), "--lambda", "1.5",
                  "--s", "5", "--k", "2"])
        assert exc.value.code == 2


class TestEval:
    def test_report_structure_and_ids(self, tmp_path):
        base, queries = _gen(tmp_path)
        table_path = _build(tmp_path, base, 0.02)
        out = tmp_path / "eval.json"
        rc = main(
            ["eval", "--base", str(base), "--queries", str(queries),
             "--table", str(table_path),
             "--methods", "none,clustering,gmm,lotus,brute",
             "--lambda", "0.3", "--s", "8", "--k", "3",
             "--trials", "1", "--out", str(out)]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        ds = load_binary(base)
        qs = load_queries(queries)
        index = build_index(ds)
        table = deserialize(table_path)
        assert doc["params"]["eps"] == table.epsilon
        by_name = {m["method"]: m for m in doc["methods"]}
        assert list(by_name) == ["none", "clustering", "gmm", "lotus", "brute"]
        n, d = ds.n_vectors, ds.dim
        assert by_name["none"]["memory_overhead_bits"] == 0
        assert by_name["clustering"]["memory_overhead_bits"] == 32 * n * d
        assert by_name["gmm"]["memory_overhead_bits"] == 32 * n * d
        assert by_name["lotus"]["memory_overhead_bits"] == table.memory_bits()
        for qi in range(qs.n_queries):
            q = qs.row(qi)
            cand, _ = index.knn(q, 8)
            assert by_name["none"]["per_query"][qi]["ids"] == index.knn(q, 3)[0].tolist()
            assert by_name["gmm"]["per_query"][qi]["ids"] == gmm_baseline(q, cand, 3, ds)
            assert by_name["clustering"]["per_query"][qi]["ids"] == clustering_baseline(
                q, cand, 3, ds, 0
            )
            res = search_and_filter(q, index, table, FilterParams(8, 3, True))
            assert by_name["lotus"]["per_query"][qi]["ids"] == res.ids
            assert by_name["lotus"]["per_query"][qi]["truncated"] == res.truncated
        # headline means recompute from the per-query docs
        for m in doc["methods"]:
            fs = [e["f"] for e in m["per_query"] if e["f"] is not None]
            assert m["f_count"] == len(fs)
            np.testing.assert_allclose(m["f_mean"], float(np.mean(fs)), rtol=1e-12)
            entry = m["per_query"][0]
            c = cost_f(qs.row(0), entry["ids"], ds, 0.3)
            np.testing.assert_allclose(entry["f"], c.total, rtol=1e-12)
            assert m["search"]["trials"] == 1
            assert set(m["search"]) == {"ms", "ms_mean", "trials"}
        assert by_name["none"]["truncation_rate"] is None
        assert isinstance(by_name["lotus"]["truncation_rate"], float)

    def test_safeguard_off_can_return_short_lists(self, tmp_path):
        base, queries = _gen(tmp_path)
        table_path = _build(tmp_path, base, 1e6)
        out = tmp_path / "eval.json"
        rc = main(
            ["eval", "--base", str(base), "--queries", str(queries),
             "--table", str(table_path), "--methods", "lotus",
             "--lambda", "0.5", "--s", "8", "--k", "3",
             "--safeguard", "off", "--trials", "1", "--out", str(out)]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        m = doc["methods"][0]
        # every pair is closer than eps, so only the head survives
        assert m["truncation_rate"] == 1.0
        assert m["f_mean"] is None and m["f_count"] == 0
        ds = load_binary(base)
        index = build_index(ds)
        qs = load_queries(queries)
        for qi, entry in enumerate(m["per_query"]):
            assert entry["ids"] == [int(index.knn(qs.row(qi), 1)[0][0])]
            assert entry["f"] is None

    def test_threads_change_timing_only(self, tmp_path):
        base, queries = _gen(tmp_path)
        table_path = _build(tmp_path, base, 0.02)
        docs = []
        for threads in ("1", "2"):
            out = tmp_path / f"eval{threads}.json"
            rc = main(
                ["eval", "--base", str(base), "--queries", str(queries),
                 "--table", str(table_path), "--methods", "lotus,gmm",
                 "--lambda", "0.3", "--s", "8", "--k", "3",
                 "--trials", "1", "--threads", threads, "--out", str(out)]
            )
            assert rc == 0
            docs.append(json.loads(out.read_text()))
        for m1, m2 in zip(docs[0]["methods"], docs[1]["methods"]):
            assert [e["ids"] for e in m1["per_query"]] == [
                e["ids"] for e in m2["per_query"]
            ]
            assert m1["f_mean"] == m2["f_mean"]

    def test_usage_errors(self, tmp_path):
        base, queries = _gen(tmp_path)
        table_path = _build(tmp_path, base, 0.02)
        common = ["eval", "--base", str(base), "--queries", str(queries),
                  "--lambda", "0.3"]
        assert main(common + ["--s", "8", "--k", "1"]) == 2
        assert main(common + ["--s", "2", "--k", "3"]) == 2
        assert main(common + ["--s", "8", "--k", "3", "--methods", "fancy"]) == 2
        assert main(common + ["--s", "8", "--k", "3", "--methods", "lotus"]) == 2
        assert main(common + ["--s", "8", "--k", "3", "--methods", ""]) == 2
        ok = common + ["--s", "8", "--k", "3", "--methods", "lotus",
                       "--table", str(table_path)]
        assert main(ok) == 0

    def test_runtime_errors(self, tmp_path):
        base, queries = _gen(tmp_path)
        table_path = _build(tmp_path, base, 0.02)
        missing = str(tmp_path / "missing.lvec")
        assert main(
            ["eval", "--base", missing, "--queries", str(queries),
             "--lambda", "0.3", "--s", "8", "--k", "3", "--methods", "none"]
        ) == 1
        # table built against a different base
        other, _ = _gen(tmp_path / "other", clusters=3, per_cluster=7)
        bad_table = _build(tmp_path / "other", other, 0.02)
        assert main(
            ["eval", "--base", str(base), "--queries", str(queries),
             "--table", str(bad_table), "--methods", "lotus",
             "--lambda", "0.3", "--s", "8", "--k", "3"]
        ) == 1
        # enumeration guard: C(30, 15) is over the subset budget
        big_base, big_queries = _gen(tmp_path / "big", clusters=5, per_cluster=8)
        assert main(
            ["eval", "--base", str(big_base), "--queries", str(big_queries),
             "--methods", "brute", "--lambda", "0.3", "--s", "30", "--k", "15"]
        ) == 1


class TestBench:
    def test_rows_and_growth(self, tmp_path):
        base, queries = _gen(tmp_path, per_cluster=15)
        table_path = _build(tmp_path, base, 0.02)
        out = tmp_path / "bench.json"
        rc = main(
            ["bench", "--base", str(base), "--queries", str(queries),
             "--table", str(table_path), "--s-list", "8,4,8",
             "--lambda", "0.3", "--k", "3", "--trials", "1", "--out", str(out)]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        assert [r["s"] for r in doc["rows"]] == [4, 8]
        assert doc["params"]["s_list"] == [4, 8]
        assert len(doc["growth"]) == 1
        g = doc["growth"][0]
        assert (g["from_s"], g["to_s"]) == (4, 8)
        assert isinstance(g["ok"], bool)
        assert isinstance(doc["linear_ok"], bool)
        for r in doc["rows"]:
            assert r["f_mean"] is not None
            assert r["filter"]["ms"] >= 0.0

    def test_usage_errors(self, tmp_path):
        base, queries = _gen(tmp_path)
        table_path = _build(tmp_path, base, 0.02)
        common = ["bench", "--base", str(base), "--queries", str(queries),
                  "--table", str(table_path), "--lambda", "0.3"]
        assert main(common + ["--s-list", "4,8", "--k", "1"]) == 2
        assert main(common + ["--s-list", "2,8", "--k", "3"]) == 2
        assert main(common + ["--s-list", ",", "--k", "3"]) == 2


class TestConsoleEntryPoint:
    def test_installed_script_records_argv(self, tmp_path):
        exe = shutil.which("lotus")
        assert exe is not None
        out = tmp_path / "gen.json"
        argv = [
            "gen", "--base", str(tmp_path / "b.lvec"),
            "--queries", str(tmp_path / "q.lvec"),
            "--clusters", "2", "--per-cluster", "4", "--dim", "2",
            "--n-queries", "3", "--seed", "1", "--out", str(out),
        ]
        proc = subprocess.run([exe, *argv], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "base: 8 x 2" in proc.stdout
        doc = json.loads(out.read_text())
        assert doc["manifest"]["argv"] == argv
        assert doc["manifest"]["package_version"]

    def test_module_invocation_matches_script(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "lotusfilter.cli", "gen",
             "--base", str(tmp_path / "b.lvec"),
             "--queries", str(tmp_path / "q.lvec"),
             "--clusters", "2", "--per-cluster", "4", "--dim", "2",
             "--n-queries", "3", "--seed", "1"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        exe = shutil.which("lotus")
        ref = subprocess.run(
            [exe, "gen", "--base", str(tmp_path / "b2.lvec"),
             "--queries", str(tmp_path / "q2.lvec"),
             "--clusters", "2", "--per-cluster", "4", "--dim", "2",
             "--n-queries", "3", "--seed", "1"],
            capture_output=True, text=True,
        )
        assert (tmp_path / "b.lvec").read_bytes() == (tmp_path / "b2.lvec").read_bytes()
        assert (tmp_path / "q.lvec").read_bytes() == (tmp_path / "q2.lvec").read_bytes()
        assert ref.returncode == 0
