"""Small bundled networks: Zachary's karate club and Padgett's Florentine marriages."""

from __future__ import annotations

from importlib import resources

from ..graph import Graph, parse_edge_list

DATASETS = ("karate", "florentine")


def dataset_text(name: str) -> str:
    if name not in DATASETS:
        raise KeyError(f"unknown dataset {name!r}; available: {', '.join(DATASETS)}")
    return resources.files(__package__).joinpath(f"{name}.txt").read_text()


def load_dataset(name: str) -> Graph:
    return parse_edge_list(dataset_text(name))


def vertex_names(name: str) -> list[str]:
    """Vertex names from the file's comment header (empty if none are listed)."""
    names = []
    for line in dataset_text(name).splitlines():
        parts = line.lstrip("#").split(None, 1)
        if line.startswith("#") and len(parts) == 2 and parts[0].isdigit():
            names.append(parts[1].strip())
    return names
