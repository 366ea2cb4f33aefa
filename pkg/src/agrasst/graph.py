"""Labelled simple undirected graphs stored as edge-indicator vectors.

A graph on ``n`` vertices is a vector ``x`` of ``N = n(n-1)/2`` bits, one per
vertex pair.  Pairs are indexed lexicographically: ``(0,1), (0,2), ..., (n-2,n-1)``.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

STATISTIC_KINDS = ("edges", "sumdeg", "bideg", "d3", "tri")
SCALAR_KINDS = ("edges", "sumdeg", "tri")


class InvalidStatisticError(ValueError):
    pass


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(i: int, j: int, n: int) -> int:
    """Index of the vertex pair ``{i, j}`` in the lexicographic order."""
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"invalid vertex pair ({i}, {j}) for n={n}")
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def pair_vertices(s: int, n: int) -> tuple[int, int]:
    rows, cols = pair_arrays(n)
    if not 0 <= s < len(rows):
        raise IndexError(f"pair index {s} out of range for n={n}")
    return int(rows[s]), int(cols[s])


@lru_cache(maxsize=None)
def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays ``(I, J)`` with ``I[s] < J[s]`` for every pair index."""
    rows, cols = np.triu_indices(n, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


class Graph:
    """Immutable graph value.

    Equality and hashing use ``n`` and the edge bits, so graphs can be used as
    dictionary keys (e.g. in enumerated distributions).
    """

    __slots__ = ("n", "bits", "_adj", "_key")

    def __init__(self, n: int, bits: Iterable[int] | np.ndarray | None = None):
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        size = num_pairs(n)
        if bits is None:
            arr = np.zeros(size, dtype=np.uint8)
        else:
            arr = np.array(bits, dtype=np.uint8).reshape(-1)
            if arr.size != size:
                raise ValueError(f"expected {size} edge indicators for n={n}, got {arr.size}")
            if arr.size and arr.max() > 1:
                raise ValueError("edge indicators must be 0 or 1")
        arr.setflags(write=False)
        self.n = n
        self.bits = arr
        self._adj = None
        self._key = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        bits = np.zeros(num_pairs(n), dtype=np.uint8)
        for i, j in edges:
            bits[pair_index(i, j, n)] = 1
        return cls(n, bits)

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "Graph":
        adj = np.asarray(adj)
        n = adj.shape[0]
        rows, cols = pair_arrays(n)
        return cls(n, (adj[rows, cols] != 0).astype(np.uint8))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, np.ones(num_pairs(n), dtype=np.uint8))

    @property
    def num_pairs(self) -> int:
        return self.bits.size

    def adjacency(self) -> np.ndarray:
        """Symmetric 0/1 adjacency matrix (read-only, cached)."""
        if self._adj is None:
            adj = np.zeros((self.n, self.n), dtype=np.int64)
            rows, cols = pair_arrays(self.n)
            adj[rows, cols] = self.bits
            adj[cols, rows] = self.bits
            adj.setflags(write=False)
            self._adj = adj
        return self._adj

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = pair_arrays(self.n)
        on = np.flatnonzero(self.bits)
        return [(int(rows[s]), int(cols[s])) for s in on]

    def toggle(self, s: int, bit: int) -> "Graph":
        return toggle(self, s, bit)

    def _hash_key(self):
        if self._key is None:
            self._key = (self.n, np.packbits(self.bits).tobytes())
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._hash_key() == other._hash_key()

    def __hash__(self):
        return hash(self._hash_key())

    def __repr__(self):
        return f"Graph(n={self.n}, edges={int(self.bits.sum())})"


def toggle(g: Graph, s: int, bit: int) -> Graph:
    """Return ``x^{(s,1)}`` (bit=1) or ``x^{(s,0)}`` (bit=0); ``g`` is untouched."""
    if not 0 <= s < g.num_pairs:
        raise IndexError(f"pair index {s} out of range [0, {g.num_pairs})")
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    if g.bits[s] == bit:
        return g
    bits = g.bits.copy()
    bits[s] = bit
    return Graph(g.n, bits)


def flip_all(g: Graph) -> np.ndarray:
    """Stack of the ``N`` single-pair flips of ``g`` as an ``(N, N)`` bit matrix.

    Row ``s`` is ``g`` with entry ``s`` complemented, i.e. whichever of
    ``x^{(s,1)}``, ``x^{(s,0)}`` differs from ``g``.
    """
    size = g.num_pairs
    out = np.broadcast_to(g.bits, (size, size)).copy()
    idx = np.arange(size)
    out[idx, idx] ^= 1
    return out


def bits_to_adjacency(bits: np.ndarray, n: int) -> np.ndarray:
    """Batch version of :meth:`Graph.adjacency` for a ``(G, N)`` bit array."""
    bits = np.atleast_2d(bits)
    rows, cols = pair_arrays(n)
    adj = np.zeros((bits.shape[0], n, n), dtype=np.int64)
    adj[:, rows, cols] = bits
    adj[:, cols, rows] = bits
    return adj


# -- counts -----------------------------------------------------------------


def degree_vector(g: Graph) -> np.ndarray:
    return g.adjacency().sum(axis=1)


def degree_histogram(g: Graph) -> np.ndarray:
    """Counts of vertices with degree ``0..n-1``."""
    return np.bincount(degree_vector(g), minlength=g.n)[: g.n]


def count_edges(g: Graph) -> int:
    return int(g.bits.sum())


def count_two_stars(g: Graph) -> int:
    deg = degree_vector(g)
    return int((deg * (deg - 1) // 2).sum())


def count_triangles(g: Graph) -> int:
    adj = g.adjacency()
    return int(np.trace(adj @ adj @ adj)) // 6


def _count_injections(pattern: Graph, g: Graph) -> int:
    """Number of edge-preserving injections V(pattern) -> V(g), by backtracking."""
    h_adj = pattern.adjacency()
    g_adj = g.adjacency()
    k = pattern.n
    # order pattern vertices so each one (after the first) has an earlier neighbour
    order = [0]
    while len(order) < k:
        for v in range(k):
            if v not in order and any(h_adj[v, u] for u in order):
                order.append(v)
                break
    earlier = [[u for u in order[:pos] if h_adj[order[pos], u]] for pos in range(k)]
    assignment: dict[int, int] = {}
    used = set()

    def extend(pos: int) -> int:
        if pos == k:
            return 1
        v = order[pos]
        total = 0
        for w in range(g.n):
            if w in used:
                continue
            if all(g_adj[w, assignment[u]] for u in earlier[pos]):
                assignment[v] = w
                used.add(w)
                total += extend(pos + 1)
                used.discard(w)
                del assignment[v]
        return total

    return extend(0)


def is_connected(g: Graph) -> bool:
    adj = g.adjacency()
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(adj[v]):
            if int(w) not in seen:
                seen.add(int(w))
                stack.append(int(w))
    return len(seen) == g.n


def injection_count(pattern: Graph, g: Graph) -> int:
    """``t(H, x)``: edge-preserving injections of ``pattern`` into ``g``."""
    if pattern.n > g.n:
        return 0
    return _count_injections(pattern, g)


def scaled_subgraph_count(g: Graph, pattern: Graph) -> float:
    """Scaled count ``t(H,x) / (n(n-1)...(n-v_H+3))``; twice the edge count for an edge."""
    if pattern.n < 2 or not is_connected(pattern):
        raise InvalidStatisticError("pattern must be a connected graph on at least 2 vertices")
    if pattern.n > g.n:
        raise InvalidStatisticError("pattern has more vertices than the graph")
    denom = 1
    for m in range(g.n - pattern.n + 3, g.n + 1):
        denom *= m
    return injection_count(pattern, g) / denom


EDGE = Graph.from_edges(2, [(0, 1)])
TWO_STAR = Graph.from_edges(3, [(0, 1), (1, 2)])
TRIANGLE = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


# -- conditioning statistics t(x_{-s}) -------------------------------------


def _check_kind(kind: str) -> str:
    kind = kind.lower()
    if kind not in STATISTIC_KINDS:
        raise InvalidStatisticError(f"unknown statistic kind {kind!r}; expected one of {STATISTIC_KINDS}")
    return kind


def statistic_dim(kind: str) -> int:
    return {"edges": 1, "sumdeg": 1, "tri": 1, "bideg": 2, "d3": 3}[_check_kind(kind)]


def conditioning_statistics(kind: str, g: Graph) -> np.ndarray:
    """``t(x_{-s})`` for every pair ``s``; shape ``(N, dim)`` of ints.

    Every statistic is evaluated on the graph with entry ``s`` forced to 0, so
    the result depends only on ``x_{-s}``.  BiDeg is stored as ``(min, max)``.
    """
    return batch_conditioning_statistics(kind, g.bits[None, :], g.n)[0]


def batch_conditioning_statistics(kind: str, bits: np.ndarray, n: int) -> np.ndarray:
    """Vectorised :func:`conditioning_statistics` over a ``(G, N)`` bit array."""
    kind = _check_kind(kind)
    bits = np.atleast_2d(bits).astype(np.int64)
    rows, cols = pair_arrays(n)
    if kind == "edges":
        return (bits.sum(axis=1, keepdims=True) - bits)[:, :, None]
    adj = bits_to_adjacency(bits, n)
    if kind == "tri":
        common = np.einsum("gik,gjk->gij", adj, adj)
        return common[:, rows, cols][:, :, None]
    deg = adj.sum(axis=2)
    di = deg[:, rows] - bits
    dj = deg[:, cols] - bits
    if kind == "sumdeg":
        return (di + dj)[:, :, None]
    lo, hi = np.minimum(di, dj), np.maximum(di, dj)
    if kind == "bideg":
        return np.stack([lo, hi], axis=2)
    edges = bits.sum(axis=1, keepdims=True) - bits
    return np.stack([edges, lo, hi], axis=2)


def conditioning_statistic(kind: str, g: Graph, s: int):
    """Single-pair value of ``t(x_{-s})``: an int, or a tuple for BiDeg/D3."""
    if not 0 <= s < g.num_pairs:
        raise IndexError(f"pair index {s} out of range [0, {g.num_pairs})")
    row = conditioning_statistics(kind, g)[s]
    if row.size == 1:
        return int(row[0])
    return tuple(int(v) for v in row)


# -- edge-list I/O ---------------------------------------------------------


def format_edge_list(g: Graph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"{i} {j}" for i, j in g.edges()]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    """Parse ``n <count>`` followed by ``i j`` lines; ``#`` starts a comment."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ValueError(f"line {lineno}: expected header 'n <count>', got {raw!r}")
            n = int(parts[1])
            continue
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'i j', got {raw!r}")
        i, j = int(parts[0]), int(parts[1])
        if not (0 <= i < j < n):
            raise ValueError(f"line {lineno}: pair ({i}, {j}) must satisfy 0 <= i < j < {n}")
        edges.append((i, j))
    if n is None:
        raise ValueError("missing 'n <count>' header")
    return Graph.from_edges(n, edges)


def read_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def write_edge_list(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(g))


def stack_bits(graphs: Sequence[Graph]) -> np.ndarray:
    """``(G, N)`` uint8 array of edge indicators; all graphs must share ``n``."""
    if not graphs:
        raise ValueError("empty graph list")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("graphs have different vertex counts")
    return np.stack([g.bits for g in graphs])


def all_graphs(n: int) -> list[Graph]:
    """Every labelled graph on ``n`` vertices (2^N of them)."""
    size = num_pairs(n)
    return [Graph(n, bits) for bits in itertools.product((0, 1), repeat=size)]


def relabel(g: Graph, perm: Sequence[int]) -> Graph:
    """Graph with vertex ``v`` renamed ``perm[v]``."""
    return Graph.from_edges(g.n, [(perm[i], perm[j]) for i, j in g.edges()])
