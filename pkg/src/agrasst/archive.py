"""Sample archives: how external generators hand graphs to the tests.

Two layouts are read:

* a directory of ``sample_00000.txt, sample_00001.txt, ...`` edge-list files
  plus a ``manifest.json`` with ``n``, ``count``, ``generator`` and ``seed``;
* a single text file holding edge lists separated by lines of ``---``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .graph import Graph, format_edge_list, parse_edge_list

MANIFEST = "manifest.json"
SEPARATOR = "---"


class ArchiveError(ValueError):
    pass


def write_archive(graphs: Sequence[Graph], directory, generator: str = "", seed=None) -> Path:
    if len(graphs) == 0:
        raise ArchiveError("refusing to write an empty archive")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ArchiveError("all graphs in an archive must have the same n")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, g in enumerate(graphs):
        (directory / f"sample_{k:05d}.txt").write_text(format_edge_list(g))
    manifest = {"n": n, "count": len(graphs), "generator": generator, "seed": seed}
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return directory


def read_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST
    return json.loads(path.read_text()) if path.exists() else {}


def _split_concatenated(text: str) -> list[str]:
    chunks, current = [], []
    for line in text.splitlines():
        if line.strip() == SEPARATOR:
            chunks.append("\n".join(current))
            current = []
        else:
            current.append(line)
    chunks.append("\n".join(current))
    # a trailing separator leaves a chunk with no content
    return [c for c in chunks if any(l.split("#", 1)[0].strip() for l in c.splitlines())]


def read_archive(path) -> list[Graph]:
    """Graphs from an archive directory or a ``---``-separated file."""
    path = Path(path)
    if not path.exists():
        raise ArchiveError(f"no such archive: {path}")
    if path.is_file():
        graphs = [parse_edge_list(chunk) for chunk in _split_concatenated(path.read_text())]
    else:
        files = sorted(path.glob("sample_*.txt"))
        graphs = [parse_edge_list(f.read_text()) for f in files]
        manifest = read_manifest(path)
        if "count" in manifest and manifest["count"] != len(graphs):
            raise ArchiveError(f"manifest lists {manifest['count']} samples, found {len(graphs)}")
        if "n" in manifest and any(g.n != manifest["n"] for g in graphs):
            raise ArchiveError("sample vertex count disagrees with manifest")
    if not graphs:
        raise ArchiveError(f"archive {path} holds no graphs")
    if any(g.n != graphs[0].n for g in graphs):
        raise ArchiveError("archive mixes graphs with different n")
    return graphs


def write_concatenated(graphs: Sequence[Graph], path) -> Path:
    path = Path(path)
    path.write_text(f"\n{SEPARATOR}\n".join(format_edge_list(g).rstrip("\n") for g in graphs) + "\n")
    return path
