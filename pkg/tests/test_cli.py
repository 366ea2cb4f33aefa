import json
import subprocess
import sys

import pytest

from agrasst.archive import read_archive, read_manifest, write_concatenated
from agrasst.cli import EXIT_ERROR, EXIT_OK, EXIT_REJECT, main, parse_args, parse_model
from agrasst.estimator import ConditionalEstimate
from agrasst.graph import Graph, write_edge_list
from agrasst.models import bernoulli_sample
from agrasst.sources import BernoulliSource, ErgmSource


@pytest.fixture
def er_archive(tmp_path):
    out = tmp_path / "er"
    assert main(["sample", "--model", "er:0.2", "--n", "12", "--count", "80", "--seed", "1", "--out", str(out)]) == 0
    return out


def test_parse_model():
    assert isinstance(parse_model("er:0.3", 10), BernoulliSource)
    src = parse_model("e2st:-1,0.1,0.2", 10)
    assert isinstance(src, ErgmSource) and src.spec.beta.tolist() == [-1.0, 0.1, 0.2]
    assert parse_model("e2st", 10).spec.beta.tolist() == [-2.0, 0.0, 0.01]
    with pytest.raises(Exception):
        parse_model("graphrnn", 10)


def test_sample_writes_archive(er_archive):
    assert read_manifest(er_archive)["count"] == 80
    assert len(read_archive(er_archive)) == 80


def test_sample_single_and_empty(tmp_path):
    assert main(["sample", "--model", "er:0", "--n", "5", "--count", "1", "--out", str(tmp_path / "a")]) == 0
    assert len(list((tmp_path / "a").glob("sample_*.txt"))) == 1
    assert read_archive(tmp_path / "a") == [Graph.empty(5)]


def test_sample_concatenated(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["sample", "--model", "e2st", "--n", "8", "--count", "4", "--out", str(out)]) == 0
    assert len(read_archive(out)) == 4


def test_estimate_is_reproducible(er_archive, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["estimate", "--archive", str(er_archive), "--stat", "bideg", "--out", str(a)]) == 0
    assert main(["estimate", "--archive", str(er_archive), "--stat", "bideg", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert ConditionalEstimate.from_json(a.read_text()).kind == "bideg"


def test_estimate_complete_graphs(tmp_path):
    write_concatenated([Graph.complete(4)] * 3, tmp_path / "k4.txt")
    out = tmp_path / "est.json"
    assert main(["estimate", "--archive", str(tmp_path / "k4.txt"), "--out", str(out)]) == 0
    entries = json.loads(out.read_text())["entries"]
    assert entries == [{"k": [5], "n_k": 18, "N_k": 18}]


def test_test_command_round_trip(er_archive, tmp_path):
    x = tmp_path / "x.txt"
    write_edge_list(bernoulli_sample(12, 0.2, 1, seed=99)[0], x)
    out = tmp_path / "report.json"
    code = main(["test", "--graph", str(x), "--archive", str(er_archive), "--L", "40", "--m", "40", "--B", "20",
                 "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == (EXIT_REJECT if report["reject"] else EXIT_OK)
    assert report["method"] == "agrasst" and len(report["null_taus"]) == 40


def test_test_with_prefitted_estimate(er_archive, tmp_path):
    est = tmp_path / "est.json"
    main(["estimate", "--archive", str(er_archive), "--out", str(est)])
    x = tmp_path / "x.txt"
    write_edge_list(bernoulli_sample(12, 0.2, 1, seed=5)[0], x)
    out = tmp_path / "r.json"
    main(["test", "--graph", str(x), "--model", "er:0.2", "--estimate", str(est), "--m", "20", "--B", "10",
          "--out", str(out)])
    assert "fit_samples" not in json.loads(out.read_text())["seeds"]


def test_dense_graph_rejected(tmp_path):
    x = tmp_path / "x.txt"
    write_edge_list(bernoulli_sample(12, 0.7, 1, seed=5)[0], x)
    assert main(["test", "--graph", str(x), "--model", "er:0.1", "--L", "60", "--m", "40", "--B", "30"]) == EXIT_REJECT


def test_n_mismatch_is_error(er_archive, tmp_path):
    x = tmp_path / "x.txt"
    write_edge_list(Graph.empty(9), x)
    assert main(["test", "--graph", str(x), "--archive", str(er_archive), "--L", "10", "--m", "10"]) == EXIT_ERROR


@pytest.mark.parametrize("flags", [["--alpha", "1.5"], ["--m", "0"], ["--B", "0"], ["--L", "0"]])
def test_invalid_config_is_error(flags):
    assert main(["test", "--graph", "karate", "--model", "er:0.1", *flags]) == EXIT_ERROR


def test_missing_files_are_errors(tmp_path):
    assert main(["test", "--graph", str(tmp_path / "none.txt"), "--model", "er:0.1"]) == EXIT_ERROR
    assert main(["estimate", "--archive", str(tmp_path / "none")]) == EXIT_ERROR
    assert main(["test", "--graph", "karate"]) == EXIT_ERROR  # no generator


def test_archive_too_small_is_error(tmp_path):
    write_concatenated(bernoulli_sample(6, 0.3, 5, seed=0), tmp_path / "s.txt")
    x = tmp_path / "x.txt"
    write_edge_list(Graph.empty(6), x)
    assert main(["test", "--graph", str(x), "--archive", str(tmp_path / "s.txt"), "--L", "5", "--m", "5"]) == 1


def test_batch_command(er_archive, tmp_path):
    x = tmp_path / "x.txt"
    write_edge_list(bernoulli_sample(12, 0.2, 1, seed=3)[0], x)
    out = tmp_path / "b.jsonl"
    code = main(["batch", "--graph", str(x), "--archive", str(er_archive), "--L", "20", "--B", "10",
                 "--batch-size", "20", "--max-batches", "3", "--out", str(out)])
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    accepted = any(l["accepted"] for l in lines)
    assert code == (EXIT_OK if accepted else EXIT_REJECT)
    assert all(l["size"] == 20 for l in lines)


def test_power_command(tmp_path):
    out = tmp_path / "p.csv"
    code = main(["power", "--n", "8", "--trials", "2", "--L", "20", "--m", "10", "--B", "5",
                 "--perturbations", "0,0.2", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "beta2,kind,B,trials,rejection_rate,stderr,runtime_ms"
    assert len(lines) == 3


def test_power_sweep(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["power", "--n", "8", "--trials", "2", "--L", "20", "--m", "10", "--sweep", "2,full",
                 "--perturbations", "0.2", "--out", str(out)]) == 0
    assert [l.split(",")[2] for l in out.read_text().splitlines()[1:]] == ["2", "full"]


def test_baseline_all(tmp_path):
    out = tmp_path / "b.jsonl"
    main(["baseline", "--graph", "florentine", "--model", "er:0.17", "--L", "30", "--m", "20", "--out", str(out)])
    methods = [json.loads(l)["method"] for l in out.read_text().splitlines()]
    assert methods == ["deg", "mddeg", "param", "tv_deg"]


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"L": 25, "m": 15, "B": "full", "alpha": 0.1}))
    args = parse_args(["--config", str(cfg), "test", "--graph", "karate", "--model", "er:0.1", "--m", "30"])
    assert args.L == 25 and args.B is None and args.alpha == 0.1
    assert args.m == 30  # explicit flag wins


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "agrasst.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "batch" in proc.stdout
