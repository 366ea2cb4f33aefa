"""Explicit random-graph models: ERGMs, Glauber dynamics and Bernoulli graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import expit, logsumexp

from .graph import (
    Graph,
    InvalidStatisticError,
    all_graphs,
    bits_to_adjacency,
    count_edges,
    count_triangles,
    count_two_stars,
    injection_count,
    is_connected,
    num_pairs,
    pair_arrays,
    scaled_subgraph_count,
    toggle,
)

MAX_ENUMERATION_N = 5
NAMED_STATISTICS = {"edges": 1, "two_stars": 2, "triangles": 3}


@dataclass(frozen=True)
class Term:
    """One sufficient statistic with its coefficient.

    ``statistic`` is ``"edges"``, ``"two_stars"``, ``"triangles"`` or a
    connected pattern :class:`Graph`.
    """

    statistic: Union[str, Graph]
    coef: float

    @property
    def num_edges(self) -> int:
        if isinstance(self.statistic, Graph):
            return count_edges(self.statistic)
        return NAMED_STATISTICS[self.statistic]


@dataclass(frozen=True)
class ErgmSpec:
    """ERGM ``q(x) ∝ exp(sum_l beta_l t_l(x))`` on ``n`` vertices.

    With ``scaled=False`` the statistics are raw counts (edges, two-stars,
    triangles).  With ``scaled=True`` they are the injection counts divided by
    ``n(n-1)...(n-v_H+3)``, so the edge statistic is twice the edge count.
    """

    n: int
    terms: tuple[Term, ...]
    scaled: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("an ERGM needs at least two vertices")
        terms = tuple(t if isinstance(t, Term) else Term(*t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("an ERGM needs at least one term")
        first = terms[0].statistic
        if not (first == "edges" or (isinstance(first, Graph) and first.n == 2 and count_edges(first) == 1)):
            raise ValueError("the first term must be the edge statistic")
        for t in terms:
            if not math.isfinite(t.coef):
                raise ValueError("coefficients must be finite")
            if isinstance(t.statistic, Graph):
                if t.statistic.n < 2 or not is_connected(t.statistic):
                    raise InvalidStatisticError("pattern statistics must be connected graphs")
            elif t.statistic not in NAMED_STATISTICS:
                raise InvalidStatisticError(f"unknown statistic {t.statistic!r}")

    @classmethod
    def e2st(cls, n: int = 20, beta: Sequence[float] = (-2.0, 0.0, 0.01), scaled: bool = False) -> "ErgmSpec":
        """Edge / two-star / triangle model; default coefficients are the null model."""
        b1, b2, b3 = beta
        return cls(n, (Term("edges", b1), Term("two_stars", b2), Term("triangles", b3)), scaled)

    @classmethod
    def edges_only(cls, n: int, beta1: float, scaled: bool = False) -> "ErgmSpec":
        return cls(n, (Term("edges", beta1),), scaled)

    @property
    def beta(self) -> np.ndarray:
        return np.array([t.coef for t in self.terms], dtype=float)

    @property
    def num_pairs(self) -> int:
        return num_pairs(self.n)

    def with_coef(self, index: int, value: float) -> "ErgmSpec":
        terms = list(self.terms)
        terms[index] = Term(terms[index].statistic, value)
        return ErgmSpec(self.n, tuple(terms), self.scaled)

    @property
    def _standard(self) -> bool:
        return all(isinstance(t.statistic, str) for t in self.terms)

    def statistics(self, g: Graph) -> np.ndarray:
        """Full statistic vector ``t(x)`` by direct recount."""
        return np.array([_term_value(t, g, self.scaled) for t in self.terms], dtype=float)

    def log_weight(self, g: Graph) -> float:
        return float(self.beta @ self.statistics(g))

    def change_statistics(self, g: Graph) -> np.ndarray:
        """``Δ_s t(x) = t(x^{(s,1)}) - t(x^{(s,0)})`` for every pair; shape ``(N, k)``."""
        if self._standard:
            return _standard_changes(self, g.bits[None, :])[0]
        out = np.empty((g.num_pairs, len(self.terms)))
        for s in range(g.num_pairs):
            out[s] = self.statistics(toggle(g, s, 1)) - self.statistics(toggle(g, s, 0))
        return out

    def change_statistics_batch(self, bits: np.ndarray) -> np.ndarray:
        """Change statistics for a batch of bit vectors; shape ``(G, N, k)``."""
        bits = np.atleast_2d(bits)
        if self._standard:
            return _standard_changes(self, bits)
        return np.stack([self.change_statistics(Graph(self.n, b)) for b in bits])

    def probabilities(self, g: Graph) -> np.ndarray:
        """Full conditionals ``q(x^{(s,1)} | x_{-s})`` for every pair ``s``."""
        return expit(self.change_statistics(g) @ self.beta)


def _term_value(term: Term, g: Graph, scaled: bool) -> float:
    stat = term.statistic
    if isinstance(stat, Graph):
        if scaled:
            return scaled_subgraph_count(g, stat)
        return injection_count(stat, g) / injection_count(stat, stat)
    raw = {"edges": count_edges, "two_stars": count_two_stars, "triangles": count_triangles}[stat](g)
    if not scaled:
        return float(raw)
    # injections per copy: edge 2, two-star 2, triangle 6; denominators n for v_H = 3
    if stat == "edges":
        return 2.0 * raw
    if stat == "two_stars":
        return 2.0 * raw / g.n
    return 6.0 * raw / g.n


def _raw_changes(adj: np.ndarray, i: np.ndarray, j: np.ndarray, xs: np.ndarray, stats: Sequence[str]) -> np.ndarray:
    """Raw change statistics for pairs ``(i, j)`` of a batch of adjacency matrices.

    ``adj`` has shape ``(G, n, n)``; ``i``, ``j``, ``xs`` have shape ``(G, P)``.
    """
    g_idx = np.arange(adj.shape[0])[:, None]
    cols = []
    for stat in stats:
        if stat == "edges":
            cols.append(np.ones(i.shape))
        elif stat == "two_stars":
            deg = adj.sum(axis=2)
            cols.append(deg[g_idx, i] + deg[g_idx, j] - 2 * xs)
        else:
            cols.append((adj[g_idx, i, :] * adj[g_idx, j, :]).sum(axis=-1))
    return np.stack(cols, axis=-1).astype(float)


def _scale_factors(spec: ErgmSpec) -> np.ndarray:
    if not spec.scaled:
        return np.ones(len(spec.terms))
    per = {"edges": 2.0, "two_stars": 2.0 / spec.n, "triangles": 6.0 / spec.n}
    return np.array([per[t.statistic] for t in spec.terms])


def _standard_changes(spec: ErgmSpec, bits: np.ndarray) -> np.ndarray:
    bits = np.atleast_2d(bits).astype(np.int64)
    adj = bits_to_adjacency(bits, spec.n)
    rows, cols = pair_arrays(spec.n)
    count = bits.shape[0]
    i = np.broadcast_to(rows, (count, rows.size))
    j = np.broadcast_to(cols, (count, cols.size))
    stats = [t.statistic for t in spec.terms]
    return _raw_changes(adj, i, j, bits, stats) * _scale_factors(spec)


def exact_conditional(spec: ErgmSpec, g: Graph, s: int) -> float:
    """``q(x^{(s,1)} | x_{-s})``, the logistic of the change in ``beta . t``."""
    if not 0 <= s < g.num_pairs:
        raise IndexError(f"pair index {s} out of range")
    if g.n != spec.n:
        raise ValueError("graph and model have different vertex counts")
    if spec._standard:
        return float(spec.probabilities(g)[s])
    delta = spec.statistics(toggle(g, s, 1)) - spec.statistics(toggle(g, s, 0))
    return float(expit(delta @ spec.beta))


# -- samplers ----------------------------------------------------------------


def glauber_sample(
    spec: ErgmSpec,
    count: int,
    burn_in: int | None = None,
    thinning: int | None = None,
    seed=None,
    chains: int = 1,
) -> list[Graph]:
    """Draw ``count`` graphs with Glauber dynamics.

    Each step picks a pair ``s`` uniformly and sets ``x_s = 1`` with probability
    ``q(x^{(s,1)} | x_{-s})``.  ``chains`` independent chains start from the
    empty graph, run ``burn_in`` steps (default ``20 N``) and then record their
    state every ``thinning`` steps (default ``N``).  Samples are returned in
    recording order, chain by chain within each recording round.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if chains < 1:
        raise ValueError("chains must be at least 1")
    size = spec.num_pairs
    burn_in = 20 * size if burn_in is None else burn_in
    thinning = size if thinning is None else thinning
    if burn_in < 0 or thinning < 0:
        raise ValueError("burn_in and thinning must be non-negative")
    thinning = max(thinning, 1)
    chains = min(chains, count)
    rng = np.random.default_rng(seed)
    rounds = -(-count // chains)

    if not spec._standard:
        return _glauber_generic(spec, count, burn_in, thinning, rng, chains, rounds)

    n = spec.n
    rows, cols = pair_arrays(n)
    adj = np.zeros((chains, n, n), dtype=np.int64)
    deg = np.zeros((chains, n), dtype=np.int64)
    c_idx = np.arange(chains)
    # zero-coefficient terms never change the logit, so they are skipped
    active = [(w, t.statistic) for w, t in zip(spec.beta * _scale_factors(spec), spec.terms) if w != 0.0]
    base_logit = sum(w for w, stat in active if stat == "edges")
    active = [(w, stat) for w, stat in active if stat != "edges"]

    def step(s, u):
        i, j = rows[s], cols[s]
        xs = adj[c_idx, i, j]
        logit = np.full(chains, base_logit)
        for w, stat in active:
            if stat == "two_stars":
                logit += w * (deg[c_idx, i] + deg[c_idx, j] - 2 * xs)
            else:
                logit += w * np.einsum("ck,ck->c", adj[c_idx, i, :], adj[c_idx, j, :])
        new = (u < expit(logit)).astype(np.int64)
        diff = new - xs
        adj[c_idx, i, j] = new
        adj[c_idx, j, i] = new
        deg[c_idx, i] += diff
        deg[c_idx, j] += diff

    def run(steps, block=256):
        for start in range(0, steps, block):
            k = min(block, steps - start)
            picks = rng.integers(size, size=(k, chains))
            us = rng.random((k, chains))
            for t in range(k):
                step(picks[t], us[t])

    run(burn_in)
    out = []
    for r in range(rounds):
        run(thinning)
        snapshot = adj[:, rows, cols].astype(np.uint8)
        out.extend(Graph(n, b) for b in snapshot)
    return out[:count]


def _glauber_generic(spec, count, burn_in, thinning, rng, chains, rounds):
    size = spec.num_pairs
    states = [np.zeros(size, dtype=np.uint8) for _ in range(chains)]

    def run(steps):
        for _ in range(steps):
            picks = rng.integers(size, size=chains)
            us = rng.random(chains)
            for c in range(chains):
                g = Graph(spec.n, states[c])
                p = exact_conditional(spec, g, int(picks[c]))
                states[c] = states[c].copy()
                states[c][picks[c]] = 1 if us[c] < p else 0

    run(burn_in)
    out = []
    for _ in range(rounds):
        run(thinning)
        out.extend(Graph(spec.n, st) for st in states)
    return out[:count]


def bernoulli_sample(n: int, p: float, count: int, seed=None) -> list[Graph]:
    """``count`` independent G(n, p) graphs."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    bits = (rng.random((count, num_pairs(n))) < p).astype(np.uint8)
    return [Graph(n, b) for b in bits]


# -- exact oracles for tiny n --------------------------------------------------


def enumerate_distribution(spec: ErgmSpec) -> dict[Graph, float]:
    """Exact Gibbs probabilities of every graph (``n <= 5``)."""
    if spec.n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration refused for n={spec.n} > {MAX_ENUMERATION_N}")
    graphs = all_graphs(spec.n)
    logw = np.array([spec.log_weight(g) for g in graphs])
    probs = np.exp(logw - logsumexp(logw))
    return dict(zip(graphs, probs.tolist()))


def sample_from_distribution(dist: dict[Graph, float], count: int, seed=None) -> list[Graph]:
    """I.i.d. draws from an enumerated distribution."""
    graphs = list(dist)
    probs = np.array([dist[g] for g in graphs])
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(graphs), size=count, p=probs / probs.sum())
    return [graphs[k] for k in picks]


def glauber_transition_matrix(spec: ErgmSpec) -> tuple[list[Graph], np.ndarray]:
    """One-step Glauber transition matrix over all graphs (``n <= 4``)."""
    if spec.n > 4:
        raise ValueError("transition matrix only built for n <= 4")
    graphs = all_graphs(spec.n)
    index = {g: k for k, g in enumerate(graphs)}
    size = spec.num_pairs
    P = np.zeros((len(graphs), len(graphs)))
    for a, g in enumerate(graphs):
        for s in range(size):
            p1 = exact_conditional(spec, g, s)
            P[a, index[toggle(g, s, 1)]] += p1 / size
            P[a, index[toggle(g, s, 0)]] += (1.0 - p1) / size
    return graphs, P


# -- Bernoulli-approximation regime ------------------------------------------------


@dataclass
class RegimeReport:
    a_star: float | None
    phi_prime_half: float
    satisfied: bool
    fixed_points: list[float] = field(default_factory=list)

    @property
    def multiple_fixed_points(self) -> bool:
        return len(self.fixed_points) > 1


def _big_phi(spec: ErgmSpec, a: float) -> float:
    return sum(t.coef * t.num_edges * a ** (t.num_edges - 1) for t in spec.terms)


def _small_phi(spec: ErgmSpec, a: float) -> float:
    return (1.0 + math.tanh(_big_phi(spec, a))) / 2.0


def _bisect(f, lo, hi, tol=1e-12):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def check_regime(spec: ErgmSpec, grid: int = 4001) -> RegimeReport:
    """Check the high-temperature conditions and locate ``a*`` with ``φ(a*) = a*``.

    ``φ(a) = (1 + tanh Φ(a)) / 2`` with ``Φ(a) = Σ β_l e_l a^{e_l - 1}``.  All
    fixed points on ``[0, 1]`` are bracketed on a grid and refined by bisection;
    the reported one is where plain iteration from ``a = 0.5`` ends up.
    """
    phi_prime_half = 0.5 * sum(abs(t.coef) * t.num_edges * (t.num_edges - 1) for t in spec.terms)

    def gap(a):
        return _small_phi(spec, a) - a

    xs = np.linspace(0.0, 1.0, grid)
    vals = np.array([gap(a) for a in xs])
    roots = []
    for k in range(grid - 1):
        if vals[k] == 0.0:
            roots.append(float(xs[k]))
        elif vals[k] * vals[k + 1] < 0:
            roots.append(_bisect(gap, xs[k], xs[k + 1]))
    if vals[-1] == 0.0:
        roots.append(1.0)

    a_star = None
    if roots:
        a = 0.5
        for _ in range(10000):
            nxt = _small_phi(spec, a)
            if abs(nxt - a) < 1e-14:
                break
            a = nxt
        a_star = min(roots, key=lambda r: abs(r - a))
    ok = a_star is not None and abs(_small_phi(spec, a_star) - a_star) < 1e-12
    return RegimeReport(
        a_star=None if a_star is None else float(a_star),
        phi_prime_half=float(phi_prime_half),
        satisfied=bool(phi_prime_half < 1.0 and ok),
        fixed_points=[float(r) for r in roots],
    )
