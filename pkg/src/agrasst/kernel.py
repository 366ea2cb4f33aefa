"""Graph kernels: Weisfeiler-Lehman subtree and a Gaussian kernel on edge indicators."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .graph import Graph, bits_to_adjacency, stack_bits, toggle


@dataclass(frozen=True)
class KernelSpec:
    """``kind`` is ``"wl"`` or ``"gauss"``.

    ``sigma2=None`` means the automatic bandwidth ``sigma^2 = N``.
    ``normalize=None`` picks the per-kind default (on for WL, off for Gaussian).
    """

    kind: str = "wl"
    height: int = 3
    sigma2: float | None = None
    normalize: bool | None = None

    def __post_init__(self):
        if self.kind not in ("wl", "gauss"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.height < 0:
            raise ValueError("WL height must be >= 0")
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise ValueError("sigma^2 must be positive")

    @property
    def normalized(self) -> bool:
        if self.normalize is None:
            return self.kind == "wl"
        return self.normalize

    def bandwidth(self, n: int) -> float:
        return float(self.sigma2) if self.sigma2 is not None else n * (n - 1) / 2

    def __str__(self):
        if self.kind == "wl":
            return f"wl:{self.height}"
        return "gauss:auto" if self.sigma2 is None else f"gauss:{self.sigma2:g}"


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``wl:3``, ``gauss:auto`` or ``gauss:<sigma^2>``."""
    kind, _, arg = text.strip().lower().partition(":")
    if kind == "wl":
        return KernelSpec("wl", height=int(arg) if arg else 3)
    if kind == "gauss":
        if arg in ("", "auto"):
            return KernelSpec("gauss")
        return KernelSpec("gauss", sigma2=float(arg))
    raise ValueError(f"cannot parse kernel {text!r}")


def wl_labels(bits: np.ndarray, n: int, height: int) -> list[np.ndarray]:
    """WL vertex labels for a batch, one ``(G, n)`` array per round ``0..height``.

    Round 0 labels are constant.  Each refinement compresses (own label,
    sorted neighbour labels) through one dictionary shared by the batch, so
    equal labels mean equal rooted subtree patterns across all graphs.
    """
    bits = np.atleast_2d(bits)
    adj = bits_to_adjacency(bits, n).astype(bool)
    labels = np.zeros((bits.shape[0], n), dtype=np.int64)
    rounds = [labels]
    for _ in range(height):
        neigh = np.where(adj, labels[:, None, :], -1)
        neigh.sort(axis=2)
        sig = np.concatenate([labels[:, :, None], neigh], axis=2).reshape(-1, n + 1)
        labels = _compress_rows(sig).reshape(bits.shape[0], n)
        rounds.append(labels)
    return rounds


_HASH_MULT = np.random.default_rng(20220531).integers(1, 2**63, size=4096, dtype=np.int64) | 1


def _compress_rows(sig: np.ndarray) -> np.ndarray:
    """Dense ids for the distinct rows of ``sig`` (exact).

    Rows are hashed to one int64 and deduplicated in 1-d; the grouping is then
    checked against the rows themselves and recomputed with a row-wise unique
    if any two different rows shared a hash.
    """
    width = sig.shape[1]
    if width > _HASH_MULT.size:
        return np.unique(sig, axis=0, return_inverse=True)[1].ravel()
    with np.errstate(over="ignore"):
        h = (sig.astype(np.int64) * _HASH_MULT[:width]).sum(axis=1)
    _, first, inv = np.unique(h, return_index=True, return_inverse=True)
    inv = inv.ravel()
    if not np.array_equal(sig, sig[first[inv]]):
        return np.unique(sig, axis=0, return_inverse=True)[1].ravel()
    return inv


def _wl_columns(bits: np.ndarray, n: int, height: int) -> tuple[np.ndarray, int]:
    """Feature column of every (graph, vertex, round); shape ``(G, n*(h+1))``."""
    cols = []
    offset = 0
    for labels in wl_labels(bits, n, height):
        cols.append(labels + offset)
        offset += int(labels.max()) + 1
    return np.concatenate(cols, axis=1), offset


def wl_features(graphs: Sequence[Graph] | np.ndarray, height: int = 3, n: int | None = None) -> sparse.csr_matrix:
    """Sparse WL subtree count features (rows = graphs) over a shared dictionary."""
    if isinstance(graphs, np.ndarray):
        bits = graphs
    else:
        bits = stack_bits(graphs)
        n = graphs[0].n
    cols, width = _wl_columns(bits, n, height)
    rows = np.repeat(np.arange(bits.shape[0]), cols.shape[1])
    data = np.ones(cols.size)
    return sparse.coo_matrix((data, (rows, cols.ravel())), shape=(bits.shape[0], width)).tocsr()


def _gauss_gram(a: np.ndarray, b: np.ndarray, sigma2: float) -> np.ndarray:
    a = a.astype(float)
    b = b.astype(float)
    hamming = a.sum(1)[:, None] + b.sum(1)[None, :] - 2.0 * a @ b.T
    return np.exp(-hamming / sigma2)


def gram_bits(spec: KernelSpec, bits: np.ndarray, n: int) -> np.ndarray:
    bits = np.atleast_2d(bits)
    if spec.kind == "wl":
        F = wl_features(bits, spec.height, n)
        G = (F @ F.T).toarray()
    else:
        G = _gauss_gram(bits, bits, spec.bandwidth(n))
    if spec.normalized:
        d = np.sqrt(np.diag(G))
        G = G / np.outer(d, d)
    return G


def gram(spec: KernelSpec, graphs: Sequence[Graph]) -> np.ndarray:
    """Kernel matrix over a list of graphs sharing ``n``."""
    return gram_bits(spec, stack_bits(graphs), graphs[0].n)


def evaluate(spec: KernelSpec, g1: Graph, g2: Graph) -> float:
    if g1.n != g2.n:
        raise ValueError(f"graphs have different vertex counts ({g1.n} vs {g2.n})")
    return float(gram(spec, [g1, g2])[0, 1])


def quadratic_form(spec: KernelSpec, bits: np.ndarray, n: int, weights: np.ndarray) -> float:
    """``w^T K w`` over the graphs in ``bits``, i.e. ``||sum_g w_g K(g, .)||^2``.

    For WL the RKHS element is built explicitly from the sparse feature
    counts, which avoids forming the Gram matrix.
    """
    weights = np.asarray(weights, dtype=float)
    if spec.kind != "wl":
        return float(weights @ gram_bits(spec, bits, n) @ weights)
    cols, width = _wl_columns(bits, n, spec.height)
    g_count = cols.shape[0]
    if spec.normalized:
        per_graph = np.repeat(np.arange(g_count), cols.shape[1])
        # squared feature norm of each graph = sum of squared label counts
        cells, counts = np.unique(per_graph * width + cols.ravel(), return_counts=True)
        norms = np.sqrt(np.bincount(cells // width, weights=counts.astype(float) ** 2, minlength=g_count))
        scale = weights / norms
    else:
        scale = weights
    u = np.bincount(cols.ravel(), weights=np.repeat(scale, cols.shape[1]), minlength=width)
    return float(u @ u)


class KernelCache:
    """Memoised pairwise kernel evaluations with an evaluation counter.

    Lookups are lock-free; inserts take a lock, so concurrent readers see
    either no entry or the final value.
    """

    def __init__(self, spec: KernelSpec):
        self.spec = spec
        self.evaluations = 0
        self._values: dict = {}
        self._lock = threading.Lock()

    def __call__(self, g1: Graph, g2: Graph) -> float:
        key = frozenset((g1, g2))
        value = self._values.get(key)
        if value is None:
            value = evaluate(self.spec, g1, g2)
            with self._lock:
                if key not in self._values:
                    self._values[key] = value
                    self.evaluations += 1
        return value


def perturbation_triple(x: Graph, s: int) -> tuple[Graph, Graph, Graph]:
    return toggle(x, s, 1), toggle(x, s, 0), x


def stein_apply_gram(spec: KernelSpec, x: Graph, pairs: Sequence[int], cache: KernelCache | None = None) -> dict:
    """Kernel values between the triples ``(x^{(s,1)}, x^{(s,0)}, x)`` for all ``s, s'`` in ``pairs``.

    Returns ``{(s, s'): 3x3 array}`` where entry ``[a, b]`` is
    ``K(triple(s)[a], triple(s')[b])``.  The cache guarantees each distinct
    pair of graphs is evaluated once.
    """
    cache = cache if cache is not None else KernelCache(spec)
    triples = {s: perturbation_triple(x, s) for s in pairs}
    out = {}
    for s in triples:
        for t in triples:
            out[(s, t)] = np.array([[cache(a, b) for b in triples[t]] for a in triples[s]])
    return out
