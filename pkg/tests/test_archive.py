import json

import pytest

from agrasst.archive import ArchiveError, read_archive, read_manifest, write_archive, write_concatenated
from agrasst.graph import Graph
from agrasst.models import bernoulli_sample


def test_directory_round_trip(tmp_path):
    graphs = bernoulli_sample(7, 0.3, 5, seed=0)
    write_archive(graphs, tmp_path / "a", generator="er:0.3", seed=4)
    assert sorted(p.name for p in (tmp_path / "a").iterdir()) == [
        "manifest.json", *(f"sample_{k:05d}.txt" for k in range(5))
    ]
    assert read_manifest(tmp_path / "a") == {"n": 7, "count": 5, "generator": "er:0.3", "seed": 4}
    assert read_archive(tmp_path / "a") == graphs


def test_concatenated_round_trip(tmp_path):
    graphs = bernoulli_sample(6, 0.5, 4, seed=1) + [Graph.empty(6)]
    path = write_concatenated(graphs, tmp_path / "all.txt")
    assert read_archive(path) == graphs


def test_concatenated_with_trailing_separator(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("n 3\n0 1\n---\nn 3\n1 2\n---\n")
    assert read_archive(path) == [Graph.from_edges(3, [(0, 1)]), Graph.from_edges(3, [(1, 2)])]


def test_single_sample_archive(tmp_path):
    write_archive([Graph.empty(4)], tmp_path / "one")
    assert len(list((tmp_path / "one").glob("sample_*.txt"))) == 1
    assert read_archive(tmp_path / "one") == [Graph.empty(4)]


def test_manifest_count_mismatch(tmp_path):
    write_archive(bernoulli_sample(5, 0.5, 3, seed=0), tmp_path / "a")
    (tmp_path / "a" / "sample_00002.txt").unlink()
    with pytest.raises(ArchiveError):
        read_archive(tmp_path / "a")


def test_manifest_n_mismatch(tmp_path):
    write_archive(bernoulli_sample(5, 0.5, 2, seed=0), tmp_path / "a")
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    manifest["n"] = 6
    (tmp_path / "a" / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ArchiveError):
        read_archive(tmp_path / "a")


def test_mixed_n_rejected(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("n 3\n0 1\n---\nn 4\n1 2\n")
    with pytest.raises(ArchiveError):
        read_archive(path)
    with pytest.raises(ArchiveError):
        write_archive([Graph.empty(3), Graph.empty(4)], tmp_path / "b")


def test_missing_and_empty(tmp_path):
    with pytest.raises(ArchiveError):
        read_archive(tmp_path / "nope")
    (tmp_path / "empty").mkdir()
    with pytest.raises(ArchiveError):
        read_archive(tmp_path / "empty")
    with pytest.raises(ArchiveError):
        write_archive([], tmp_path / "c")
