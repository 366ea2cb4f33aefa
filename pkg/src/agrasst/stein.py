"""Glauber-type Stein operators on graphs and their kernel quadratic forms.

For a conditional edge probability ``a_s = q(x^{(s,1)} | .)`` the operator is

    A^{(s)} f(x) = a_s f(x^{(s,1)}) + (1 - a_s) f(x^{(s,0)}) - f(x).

The squared statistic is the RKHS norm of the averaged operator applied to
``K(x, .)``.  One of ``x^{(s,1)}, x^{(s,0)}`` equals ``x``, so the section for
pair ``s`` is ``c_s (K(x^{[s]}, .) - K(x, .))`` with ``x^{[s]}`` the graph with
entry ``s`` flipped and ``c_s = a_s`` if ``x_s = 0`` else ``1 - a_s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .estimator import ConditionalEstimate, exact_estimate
from .graph import Graph, conditioning_statistic, flip_all
from .kernel import KernelCache, KernelSpec, perturbation_triple, quadratic_form
from .models import ErgmSpec, enumerate_distribution

ZERO_FLOOR = 1e-12


class ConditionalSource(Protocol):
    def probabilities(self, g: Graph) -> np.ndarray: ...


@dataclass
class SteinStatistic:
    value: float
    mode: str  # "full" or "resampled"
    kernel: str
    source: str
    B: int | None = None
    seed: int | None = None
    indices: list[int] = field(default_factory=list)
    unseen_k_hits: int = 0

    def __float__(self):
        return self.value


def source_name(src) -> str:
    if isinstance(src, ErgmSpec):
        return "exact:" + ",".join(f"{t.coef:g}" for t in src.terms)
    if isinstance(src, ConditionalEstimate):
        return f"estimated:{src.kind}:{src.mode}:L={src.L:g}"
    return type(src).__name__


def _unseen(src, g: Graph) -> int:
    return src.unseen_hits(g) if isinstance(src, ConditionalEstimate) else 0


def _clamp(value: float) -> float:
    if value < 0.0:
        if value < -ZERO_FLOOR:
            raise FloatingPointError(f"quadratic form is negative ({value}); kernel not PSD?")
        return 0.0
    return value


def section_weights(x: Graph, probs: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficients of the averaged operator section in terms of flipped graphs.

    ``counts[s]`` is how often pair ``s`` enters the average (all ones for the
    full statistic).  Returns ``(pairs, flip_weights, weight_on_x)``.
    """
    total = counts.sum()
    coef = np.where(x.bits == 1, 1.0 - probs, probs) * counts / total
    pairs = np.flatnonzero(coef != 0.0)
    return pairs, coef[pairs], -float(coef.sum())


def _statistic_from_counts(src, spec: KernelSpec, x: Graph, counts: np.ndarray) -> float:
    probs = np.asarray(src.probabilities(x), dtype=float)
    pairs, w_flip, w_x = section_weights(x, probs, counts)
    if len(pairs) == 0:
        return 0.0
    bits = np.vstack([x.bits[None, :], flip_all(x)[pairs]])
    weights = np.concatenate([[w_x], w_flip])
    return _clamp(quadratic_form(spec, bits, x.n, weights))


def gkss_full(src: ConditionalSource, spec: KernelSpec, x: Graph) -> SteinStatistic:
    """``N^{-2} sum_{s,s'} h_x(s, s')`` over all vertex pairs.

    With an :class:`ErgmSpec` source this is gKSS; with a fitted
    :class:`ConditionalEstimate` it is the (squared) AgraSSt statistic.
    """
    value = _statistic_from_counts(src, spec, x, np.ones(x.num_pairs))
    return SteinStatistic(value, "full", str(spec), source_name(src), unseen_k_hits=_unseen(src, x))


def resample_pairs(num_pairs: int, B: int, seed) -> np.ndarray:
    """``B`` pair indices drawn uniformly with replacement."""
    if B < 1:
        raise ValueError("B must be at least 1")
    return np.random.default_rng(seed).integers(num_pairs, size=B)


def agrasst_resampled(src: ConditionalSource, spec: KernelSpec, x: Graph, B: int, seed=None) -> SteinStatistic:
    """``B^{-2} sum_{b,b'} h_x(s_b, s_b')`` with ``s_1..s_B`` resampled pairs."""
    idx = resample_pairs(x.num_pairs, B, seed)
    counts = np.bincount(idx, minlength=x.num_pairs).astype(float)
    value = _statistic_from_counts(src, spec, x, counts)
    return SteinStatistic(
        value, "resampled", str(spec), source_name(src),
        B=B, seed=seed if isinstance(seed, (int, type(None))) else None,
        indices=idx.tolist(), unseen_k_hits=_unseen(src, x),
    )


def gkss_conditional_exact(model: ErgmSpec, kind: str, spec: KernelSpec, x: Graph) -> SteinStatistic:
    """Full statistic with the exact ``P(X_s = 1 | t(X_{-s}) = k)`` from enumeration.

    This is the population target of AgraSSt with statistic ``kind``; it is a
    different operator from :func:`gkss_full` with the model's full conditionals.
    """
    est = exact_estimate(enumerate_distribution(model), kind)
    stat = gkss_full(est, spec, x)
    stat.source = f"conditional-exact:{kind}"
    return stat


# -- entrywise path (used for cross-checks and small problems) ---------------


def operator_coefficients(a: float) -> tuple[float, float, float]:
    """Coefficients of ``(K(x^{(s,1)}, .), K(x^{(s,0)}, .), K(x, .))`` in the section."""
    return a, 1.0 - a, -1.0


def h_entry(src: ConditionalSource, spec: KernelSpec, x: Graph, s: int, s2: int, cache: KernelCache | None = None) -> float:
    """``<A^{(s)} K(x, .), A^{(s')} K(., x)>`` by the nine-term expansion."""
    cache = cache if cache is not None else KernelCache(spec)
    probs = src.probabilities(x)
    ca = operator_coefficients(float(probs[s]))
    cb = operator_coefficients(float(probs[s2]))
    ta = perturbation_triple(x, s)
    tb = perturbation_triple(x, s2)
    return float(sum(ca[i] * cb[j] * cache(ta[i], tb[j]) for i in range(3) for j in range(3)))


def apply_operator(src: ConditionalSource, f: Callable[[Graph], float], x: Graph) -> np.ndarray:
    """``A^{(s)} f(x)`` for every pair ``s``, for an arbitrary test function ``f``."""
    probs = src.probabilities(x)
    fx = f(x)
    out = np.empty(x.num_pairs)
    for s in range(x.num_pairs):
        g1, g0, _ = perturbation_triple(x, s)
        out[s] = probs[s] * f(g1) + (1.0 - probs[s]) * f(g0) - fx
    return out


def conditional_law(dist: dict[Graph, float], kind: str, s: int, k) -> tuple[dict[Graph, float], float]:
    """Law of ``X`` given ``t(X_{-s}) = k`` with ``X_s`` resampled from ``q_t``.

    ``X_{-s}`` keeps its conditional distribution under ``dist`` and ``X_s`` is
    an independent Bernoulli draw with ``a = P(X_s = 1 | t(X_{-s}) = k)``.
    This law is reversible for the transitions ``x -> x^{(s,1)}`` with
    probability ``a`` and ``x -> x^{(s,0)}`` with probability ``1 - a``, so
    ``A^{(s)}`` with that ``a`` is a Stein operator for it.  Returns
    ``(law, a)``; the law is empty when ``k`` is not attainable.
    """
    cells = {}
    for g, p in dist.items():
        if conditioning_statistic(kind, g, s) == k:
            cells[g] = p
    total = sum(cells.values())
    if total == 0:
        return {}, 0.0
    a = sum(p for g, p in cells.items() if g.bits[s]) / total
    law: dict[Graph, float] = {}
    for g, p in cells.items():
        rest = p / total
        g1, g0, _ = perturbation_triple(g, s)
        law[g1] = law.get(g1, 0.0) + rest * a
        law[g0] = law.get(g0, 0.0) + rest * (1.0 - a)
    return law, a
