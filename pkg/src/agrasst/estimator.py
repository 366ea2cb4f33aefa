"""Lookup-table estimates of conditional edge probabilities given a statistic.

For a conditioning statistic ``t`` the estimate pools over all vertex pairs
and all training graphs::

    g(k) = n_k / N_k      (0 when N_k == 0)

where ``N_k`` counts pairs with ``t(x_{-s}) = k`` and ``n_k`` those among them
carrying an edge.  The cumulative variant uses ``t(x_{-s}) <= k`` instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import (
    SCALAR_KINDS,
    Graph,
    batch_conditioning_statistics,
    conditioning_statistics,
    num_pairs,
    stack_bits,
    statistic_dim,
)

MODES = ("raw", "cumulative")
SCHEMA_VERSION = 1


class EstimatorError(ValueError):
    pass


def _encode(rows: np.ndarray, base: int) -> np.ndarray:
    """Order-preserving integer code for rows of small non-negative ints."""
    code = np.zeros(rows.shape[:-1], dtype=np.int64)
    for d in range(rows.shape[-1]):
        code = code * base + rows[..., d]
    return code


@dataclass
class ConditionalEstimate:
    kind: str
    n: int
    L: float
    keys: np.ndarray  # (K, dim) sorted lexicographically
    successes: np.ndarray  # n_k
    exposures: np.ndarray  # N_k
    mode: str = "raw"
    _codes: np.ndarray = field(init=False, repr=False)
    _table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise EstimatorError(f"unknown mode {self.mode!r}")
        if self.mode == "cumulative" and self.kind not in SCALAR_KINDS:
            raise EstimatorError(f"cumulative mode needs a scalar statistic, got {self.kind!r}")
        self.keys = np.asarray(self.keys, dtype=np.int64).reshape(-1, statistic_dim(self.kind))
        self.successes = np.asarray(self.successes, dtype=float)
        self.exposures = np.asarray(self.exposures, dtype=float)
        self._codes = _encode(self.keys, self._base)
        order = np.argsort(self._codes, kind="stable")
        self.keys, self.successes, self.exposures = self.keys[order], self.successes[order], self.exposures[order]
        self._codes = self._codes[order]
        with np.errstate(invalid="ignore", divide="ignore"):
            self._table = np.where(self.exposures > 0, self.successes / np.maximum(self.exposures, 1e-300), 0.0)
            cum_n = np.cumsum(self.successes)
            cum_N = np.cumsum(self.exposures)
            self._cumulative = np.where(cum_N > 0, cum_n / np.maximum(cum_N, 1e-300), 0.0)

    @property
    def _base(self) -> int:
        return num_pairs(self.n) + 1

    @property
    def k_min(self):
        return tuple(self.keys[0]) if len(self.keys) else None

    @property
    def k_max(self):
        return tuple(self.keys[-1]) if len(self.keys) else None

    def with_mode(self, mode: str) -> "ConditionalEstimate":
        return ConditionalEstimate(self.kind, self.n, self.L, self.keys, self.successes, self.exposures, mode)

    def table(self) -> dict:
        """``{k: (n_k, N_k, g(k))}`` with scalar keys for 1-d statistics."""
        out = {}
        for key, nk, Nk, g in zip(self.keys, self.successes, self.exposures, self._table):
            k = int(key[0]) if key.size == 1 else tuple(int(v) for v in key)
            out[k] = (nk, Nk, float(g))
        return out

    def value(self, k) -> float:
        """Estimated probability for the statistic value ``k``."""
        row = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if self.kind == "bideg":
            row = np.sort(row)
        return float(self._lookup(_encode(row[None, :], self._base))[0][0])

    def _lookup(self, codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Probabilities for encoded statistic values, plus an unseen mask."""
        if len(self._codes) == 0:
            return np.zeros(codes.shape), np.ones(codes.shape, dtype=bool)
        pos = np.searchsorted(self._codes, codes)
        clipped = np.minimum(pos, len(self._codes) - 1)
        hit = self._codes[clipped] == codes
        if self.mode == "raw":
            probs = np.where(hit, self._table[clipped], 0.0)
            return probs, ~hit
        # cumulative: all observed k' <= k
        last = np.where(hit, pos, pos - 1)
        probs = np.where(last >= 0, self._cumulative[np.maximum(last, 0)], 0.0)
        return probs, last < 0

    def predict_all(self, g: Graph) -> tuple[np.ndarray, np.ndarray]:
        """Estimated ``q(x^{(s,1)} | t(x_{-s}))`` for every pair, and the unseen-k mask."""
        if g.n != self.n:
            raise EstimatorError(f"estimate fitted for n={self.n}, graph has n={g.n}")
        stats = conditioning_statistics(self.kind, g)
        return self._lookup(_encode(stats, self._base))

    def probabilities(self, g: Graph) -> np.ndarray:
        return self.predict_all(g)[0]

    def unseen_hits(self, g: Graph) -> int:
        return int(self.predict_all(g)[1].sum())

    def to_dict(self) -> dict:
        entries = []
        for key, nk, Nk in zip(self.keys, self.successes, self.exposures):
            entries.append({"k": [int(v) for v in key], "n_k": _num(nk), "N_k": _num(Nk)})
        return {
            "schema_version": SCHEMA_VERSION,
            "statistic": self.kind,
            "mode": self.mode,
            "n": self.n,
            "L": _num(self.L),
            "entries": entries,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ConditionalEstimate":
        entries = data["entries"]
        dim = statistic_dim(data["statistic"])
        keys = np.array([e["k"] for e in entries], dtype=np.int64).reshape(-1, dim)
        return cls(
            kind=data["statistic"],
            n=int(data["n"]),
            L=data["L"],
            keys=keys,
            successes=[e["n_k"] for e in entries],
            exposures=[e["N_k"] for e in entries],
            mode=data.get("mode", "raw"),
        )

    @classmethod
    def from_json(cls, text: str) -> "ConditionalEstimate":
        return cls.from_dict(json.loads(text))


def _num(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def _accumulate(kind: str, bits: np.ndarray, n: int, weights: np.ndarray | None = None, chunk: int = 2000):
    base = num_pairs(n) + 1
    succ: dict[int, float] = {}
    expo: dict[int, float] = {}
    for start in range(0, bits.shape[0], chunk):
        block = bits[start : start + chunk]
        codes = _encode(batch_conditioning_statistics(kind, block, n), base)
        w = np.ones(block.shape[0]) if weights is None else weights[start : start + chunk]
        w = np.broadcast_to(w[:, None], codes.shape)
        uniq, inv = np.unique(codes.ravel(), return_inverse=True)
        e = np.bincount(inv, weights=w.ravel(), minlength=len(uniq))
        s = np.bincount(inv, weights=(w * block).ravel(), minlength=len(uniq))
        for c, ev, sv in zip(uniq.tolist(), e, s):
            expo[c] = expo.get(c, 0.0) + ev
            succ[c] = succ.get(c, 0.0) + sv
    codes = np.array(sorted(expo), dtype=np.int64)
    dim = statistic_dim(kind)
    keys = np.zeros((len(codes), dim), dtype=np.int64)
    rem = codes.copy()
    for d in range(dim - 1, -1, -1):
        keys[:, d] = rem % base
        rem //= base
    return keys, np.array([succ[c] for c in codes]), np.array([expo[c] for c in codes])


def fit(samples: Sequence[Graph], kind: str, mode: str = "raw") -> ConditionalEstimate:
    """Pooled lookup-table estimate from generator samples."""
    if len(samples) == 0:
        raise EstimatorError("need at least one sample graph")
    try:
        bits = stack_bits(samples)
    except ValueError as exc:
        raise EstimatorError(str(exc)) from exc
    n = samples[0].n
    keys, succ, expo = _accumulate(kind.lower(), bits, n)
    return ConditionalEstimate(kind.lower(), n, len(samples), keys, succ, expo, mode)


def merge(estimates: Iterable[ConditionalEstimate]) -> ConditionalEstimate:
    """Combine estimates fitted on disjoint sample shards by adding counts."""
    estimates = list(estimates)
    first = estimates[0]
    acc: dict[tuple, list[float]] = {}
    for est in estimates:
        if (est.kind, est.n) != (first.kind, first.n):
            raise EstimatorError("cannot merge estimates for different statistics or n")
        for key, nk, Nk in zip(est.keys, est.successes, est.exposures):
            cell = acc.setdefault(tuple(int(v) for v in key), [0.0, 0.0])
            cell[0] += nk
            cell[1] += Nk
    keys = sorted(acc)
    return ConditionalEstimate(
        first.kind, first.n, sum(e.L for e in estimates),
        np.array(keys, dtype=np.int64), [acc[k][0] for k in keys], [acc[k][1] for k in keys], first.mode,
    )


def exact_estimate(dist: dict[Graph, float], kind: str, mode: str = "raw") -> ConditionalEstimate:
    """Population version of :func:`fit` from an enumerated distribution.

    Counts are replaced by probability weights, so ``g(k)`` is exactly the
    pair-pooled ``P(X_s = 1 | t(X_{-s}) = k)``.
    """
    graphs = list(dist)
    bits = stack_bits(graphs)
    weights = np.array([dist[g] for g in graphs])
    keys, succ, expo = _accumulate(kind.lower(), bits, graphs[0].n, weights)
    return ConditionalEstimate(kind.lower(), graphs[0].n, 1.0, keys, succ, expo, mode)


@dataclass
class CriticismRow:
    k: object
    generator: float
    reference: float
    weight: float

    @property
    def gap(self) -> float:
        return abs(self.generator - self.reference)


@dataclass
class Criticism:
    rows: list[CriticismRow]

    @property
    def headline(self) -> float:
        """Exposure-weighted mean absolute gap."""
        total = sum(r.weight for r in self.rows)
        if total == 0:
            return 0.0
        return sum(r.weight * r.gap for r in self.rows) / total

    def to_dict(self) -> dict:
        return {
            "headline_gap": self.headline,
            "rows": [
                {"k": r.k, "generator": r.generator, "reference": r.reference, "weight": r.weight, "gap": r.gap}
                for r in self.rows
            ],
        }


def criticize(est_generator: ConditionalEstimate, est_reference: ConditionalEstimate) -> Criticism:
    """Compare two estimates cell by cell.

    Each cell is weighted by the average of its exposure shares in the two
    tables; a cell missing from one table counts as probability 0 there.
    """
    if est_generator.kind != est_reference.kind:
        raise EstimatorError("estimates use different statistics")
    gen, ref = est_generator.table(), est_reference.table()
    tot_gen = float(est_generator.exposures.sum()) or 1.0
    tot_ref = float(est_reference.exposures.sum()) or 1.0
    rows = []
    for k in sorted(set(gen) | set(ref)):
        g_cell = gen.get(k, (0.0, 0.0, 0.0))
        r_cell = ref.get(k, (0.0, 0.0, 0.0))
        weight = 0.5 * (g_cell[1] / tot_gen + r_cell[1] / tot_ref)
        rows.append(CriticismRow(k, g_cell[2], r_cell[2], weight))
    return Criticism(rows)

