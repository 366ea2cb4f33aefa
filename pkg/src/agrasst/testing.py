"""Monte-Carlo goodness-of-fit tests for graph generators.

The AgraSSt test fits the conditional edge-probability table on ``L``
generator samples, evaluates the resampled statistic at the observed graph
and at ``m`` fresh generator samples, and rejects when the observed value
exceeds the empirical ``1 - alpha`` quantile of the simulated ones.  The four
baselines (Deg, TV_deg, MDdeg, Param) share the same Monte-Carlo harness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
from scipy.special import expit

from .estimator import ConditionalEstimate, fit
from .graph import Graph, degree_histogram, degree_vector, stack_bits
from .kernel import KernelSpec
from .models import ErgmSpec, Term
from .parallel import pmap
from .sources import InsufficientSamplesError, Source, as_source, derive_seed
from .stein import agrasst_resampled, gkss_full

SCHEMA_VERSION = 1
RIDGE = 1e-6
NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-8
COEF_CLAMP = 50.0
ALTERNATIVES = ("greater", "two-sided")

# seed stream labels (second element of the derivation path)
_FIT, _OBSERVED, _NULL_SAMPLES, _NULL_RESAMPLE, _BATCH_SAMPLES, _BATCH_RESAMPLE = range(6)


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    method: str
    tau: float
    null_taus: list[float]
    gamma: float
    alpha: float
    p_value: float
    reject: bool
    seeds: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.null_taus)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "tau": self.tau,
            "null_taus": list(self.null_taus),
            "gamma": self.gamma,
            "alpha": self.alpha,
            "p_value": self.p_value,
            "reject": self.reject,
            "seeds": self.seeds,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        verdict = "REJECT" if self.reject else "do not reject"
        return (
            f"{self.method}: tau={self.tau:.6g}  gamma_(1-alpha)={self.gamma:.6g}  "
            f"p={self.p_value:.4f}  alpha={self.alpha:g}  m={self.m}  -> {verdict}"
        )


@dataclass
class BatchReport:
    batch: int
    p_value: float
    accepted: bool
    threshold: float
    tau: float
    null_taus: list[float]
    samples: list[Graph] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "batch": self.batch,
            "p_value": self.p_value,
            "accepted": self.accepted,
            "threshold": self.threshold,
            "tau": self.tau,
            "null_taus": list(self.null_taus),
            "size": len(self.samples),
        }


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _check_count(name: str, value: int):
    if value < 1:
        raise ValueError(f"{name} must be at least 1, got {value}")


def _draw(source, count: int, seed: int, n: int) -> list[Graph]:
    graphs = list(source(count, seed))
    if len(graphs) < count:
        raise InsufficientSamplesError(f"generator returned {len(graphs)} graphs, {count} needed")
    for g in graphs:
        if g.n != n:
            raise ValueError(f"generator graph has n={g.n}, observed graph has n={n}")
    return graphs


def monte_carlo_report(method: str, tau: float, null_taus, alpha: float, seeds=None, diagnostics=None) -> TestReport:
    """One-sided decision: reject iff ``tau`` exceeds the ``1 - alpha`` null quantile."""
    _check_alpha(alpha)
    nulls = np.sort(np.asarray(null_taus, dtype=float))
    if nulls.size == 0:
        raise ValueError("need at least one simulated statistic")
    gamma = float(np.quantile(nulls, 1.0 - alpha))
    return TestReport(
        method=method,
        tau=float(tau),
        null_taus=nulls.tolist(),
        gamma=gamma,
        alpha=alpha,
        p_value=float(np.mean(nulls >= tau)),
        reject=bool(tau > gamma),
        seeds=seeds or {},
        diagnostics=diagnostics or {},
    )


def two_sided_report(method: str, tau: float, null_taus, alpha: float, seeds=None, diagnostics=None) -> TestReport:
    """Reject outside the ``[alpha/2, 1 - alpha/2]`` null quantile band; ``gamma`` is the upper end."""
    _check_alpha(alpha)
    nulls = np.sort(np.asarray(null_taus, dtype=float))
    lo = float(np.quantile(nulls, alpha / 2))
    hi = float(np.quantile(nulls, 1.0 - alpha / 2))
    p = min(1.0, 2.0 * min(np.mean(nulls >= tau), np.mean(nulls <= tau)))
    diagnostics = dict(diagnostics or {})
    diagnostics["gamma_low"] = lo
    return TestReport(method, float(tau), nulls.tolist(), hi, alpha, float(p), bool(tau < lo or tau > hi),
                      seeds or {}, diagnostics)


# -- AgraSSt ------------------------------------------------------------------


def resolve_kind(kind: str, mode: str = "raw") -> tuple[str, str]:
    """``cumdeg`` is shorthand for SumDeg with cumulative estimation."""
    kind = kind.lower()
    if kind == "cumdeg":
        return "sumdeg", "cumulative"
    return kind, mode


def _agrasst_value(est, kernel: KernelSpec, B: int | None, item) -> tuple[float, int]:
    g, seed = item
    stat = gkss_full(est, kernel, g) if B is None else agrasst_resampled(est, kernel, g, B, seed)
    return stat.value, stat.unseen_k_hits


def run_agrasst_test(
    x: Graph,
    generator: Source,
    kind: str = "edges",
    kernel: KernelSpec | None = None,
    B: int | None = 200,
    L: int = 1000,
    m: int = 200,
    alpha: float = 0.05,
    seed: int = 0,
    mode: str = "raw",
    estimate: ConditionalEstimate | None = None,
    threads: int | None = 1,
    alternative: str = "greater",
) -> TestReport:
    """AgraSSt Monte-Carlo test of ``generator`` against the observed graph ``x``.

    ``B=None`` uses the full statistic over all vertex pairs.  A pre-fitted
    ``estimate`` skips the fitting step (``L`` is then ignored).  Fitting and
    null samples are disjoint draws.

    ``alternative="greater"`` rejects for large statistics only.
    ``"two-sided"`` also rejects unusually small ones: graphs much sparser
    than the generator's output have small statistics, not large ones.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    kernel = kernel or KernelSpec()
    kind, mode = resolve_kind(kind, mode)
    _check_alpha(alpha)
    _check_count("m", m)
    if B is not None:
        _check_count("B", B)
    source = as_source(generator)
    seeds = {"master": seed}
    if estimate is None:
        _check_count("L", L)
        seeds["fit_samples"] = derive_seed(seed, _FIT)
        estimate = fit(_draw(source, L, seeds["fit_samples"], x.n), kind, mode)
    elif estimate.n != x.n:
        raise ValueError(f"estimate fitted for n={estimate.n}, observed graph has n={x.n}")
    seeds["null_samples"] = derive_seed(seed, _NULL_SAMPLES)
    nulls = _draw(source, m, seeds["null_samples"], x.n)

    seeds["observed_resample"] = derive_seed(seed, _OBSERVED)
    null_seeds = [derive_seed(seed, _NULL_RESAMPLE, i) for i in range(m)]
    seeds["null_resample"] = null_seeds
    fn = partial(_agrasst_value, estimate, kernel, B)
    tau, hits = fn((x, seeds["observed_resample"]))
    results = pmap(fn, list(zip(nulls, null_seeds)), threads, chunksize=max(1, m // 16))
    diagnostics = {
        "unseen_k_hits": hits,
        "null_unseen_k_hits": int(sum(r[1] for r in results)),
        "statistic": estimate.kind,
        "mode": estimate.mode,
        "kernel": str(kernel),
        "B": B,
        "L": estimate.L,
        "m": m,
        "n": x.n,
    }
    taus = [r[0] for r in results]
    if alternative == "two-sided":
        return two_sided_report("agrasst", tau, taus, alpha, seeds, diagnostics)
    return monte_carlo_report("agrasst", tau, taus, alpha, seeds, diagnostics)


def select_batches(
    x: Graph,
    generator: Source,
    batch_size: int,
    max_batches: int = 10,
    threshold: float = 0.05,
    kind: str = "edges",
    kernel: KernelSpec | None = None,
    B: int | None = 200,
    L: int = 1000,
    seed: int = 0,
    mode: str = "raw",
    estimate: ConditionalEstimate | None = None,
) -> list[BatchReport]:
    """Draw batches until one is consistent with ``x``.

    A batch's p-value is the fraction of its members whose statistic is at
    least the observed one; the batch is accepted when that fraction reaches
    ``threshold``.  Stops at the first accepted batch or after ``max_batches``.
    """
    _check_count("batch_size", batch_size)
    _check_count("max_batches", max_batches)
    kernel = kernel or KernelSpec()
    kind, mode = resolve_kind(kind, mode)
    source = as_source(generator)
    if estimate is None:
        _check_count("L", L)
        estimate = fit(_draw(source, L, derive_seed(seed, _FIT), x.n), kind, mode)
    tau, _ = _agrasst_value(estimate, kernel, B, (x, derive_seed(seed, _OBSERVED)))
    reports = []
    for b in range(max_batches):
        try:
            batch = _draw(source, batch_size, derive_seed(seed, _BATCH_SAMPLES, b), x.n)
        except InsufficientSamplesError:
            break  # archive exhausted: report what was seen
        taus = [
            _agrasst_value(estimate, kernel, B, (g, derive_seed(seed, _BATCH_RESAMPLE, b, i)))[0]
            for i, g in enumerate(batch)
        ]
        p = float(np.mean(np.asarray(taus) >= tau))
        reports.append(BatchReport(b, p, p >= threshold, threshold, tau, sorted(taus), batch))
        if p >= threshold:
            break
    return reports


# -- baselines ----------------------------------------------------------------


def degree_variance(g: Graph) -> float:
    return float(np.var(degree_vector(g), ddof=1))


def normalized_degree_histogram(g: Graph) -> np.ndarray:
    return degree_histogram(g) / g.n


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def mahalanobis(v: np.ndarray, mean: np.ndarray, cov: np.ndarray, ridge: float = RIDGE) -> float:
    d = np.asarray(v, dtype=float) - mean
    reg = np.atleast_2d(cov) + ridge * np.eye(len(mean))
    return float(d @ np.linalg.solve(reg, d))


def _moments(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = np.atleast_2d(rows)
    mean = rows.mean(axis=0)
    cov = np.cov(rows, rowvar=False) if rows.shape[0] > 1 else np.zeros((rows.shape[1],) * 2)
    return mean, np.atleast_2d(cov)


def _baseline_seeds(seed: int, need_fit: bool) -> dict:
    seeds = {"master": seed, "null_samples": derive_seed(seed, _NULL_SAMPLES)}
    if need_fit:
        seeds["fit_samples"] = derive_seed(seed, _FIT)
    return seeds


def baseline_deg(x: Graph, generator: Source, m: int = 200, alpha: float = 0.05, seed: int = 0) -> TestReport:
    """Two-sided test on the sample variance of the degree sequence."""
    _check_count("m", m)
    seeds = _baseline_seeds(seed, False)
    nulls = _draw(as_source(generator), m, seeds["null_samples"], x.n)
    return two_sided_report("deg", degree_variance(x), [degree_variance(g) for g in nulls], alpha, seeds)


def baseline_tv_deg(x: Graph, generator: Source, L: int = 1000, m: int = 200, alpha: float = 0.05,
                    seed: int = 0) -> TestReport:
    """Total-variation distance of the degree histogram from the generator's mean histogram."""
    _check_count("L", L)
    _check_count("m", m)
    source = as_source(generator)
    seeds = _baseline_seeds(seed, True)
    ref = np.mean([normalized_degree_histogram(g) for g in _draw(source, L, seeds["fit_samples"], x.n)], axis=0)
    nulls = _draw(source, m, seeds["null_samples"], x.n)
    taus = [total_variation(normalized_degree_histogram(g), ref) for g in nulls]
    return monte_carlo_report("tv_deg", total_variation(normalized_degree_histogram(x), ref), taus, alpha, seeds)


def baseline_mddeg(x: Graph, generator: Source, L: int = 1000, m: int = 200, alpha: float = 0.05,
                   seed: int = 0) -> TestReport:
    """Ridge-regularised Mahalanobis distance between degree histograms."""
    _check_count("L", L)
    _check_count("m", m)
    source = as_source(generator)
    seeds = _baseline_seeds(seed, True)
    mean, cov = _moments(np.array([degree_histogram(g) for g in _draw(source, L, seeds["fit_samples"], x.n)]))
    nulls = _draw(source, m, seeds["null_samples"], x.n)
    taus = [mahalanobis(degree_histogram(g), mean, cov) for g in nulls]
    return monte_carlo_report("mddeg", mahalanobis(degree_histogram(x), mean, cov), taus, alpha, seeds)


@dataclass
class MpleFit:
    coef: np.ndarray  # (G, k)
    converged: np.ndarray  # (G,) bool
    degenerate: np.ndarray  # (G,) bool: not converged or clamped
    iterations: int


def _log_pseudo_likelihood(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    eta = np.einsum("gsk,gk->gs", X, beta)
    return (y * eta - np.logaddexp(0.0, eta)).sum(axis=1)


def mple(graphs: Sequence[Graph], terms: Sequence[str] = ("edges", "two_stars", "triangles"),
         scaled: bool = False) -> MpleFit:
    """Maximum pseudo-likelihood ERGM coefficients for each graph.

    Logistic regression of the edge indicators on the change statistics,
    solved by Newton steps with step halving.  Fits that fail to reach a
    gradient norm of ``1e-8`` in 100 iterations, or whose coefficients leave
    ``[-50, 50]``, are clamped and flagged degenerate.  So are perfectly
    separated graphs (e.g. complete or empty), whose optimum is at infinity.
    """
    if len(graphs) == 0:
        raise ValueError("need at least one graph")
    n = graphs[0].n
    spec = ErgmSpec(n, tuple(Term(t, 0.0) for t in terms), scaled)
    bits = stack_bits(graphs)
    X = spec.change_statistics_batch(bits)
    y = bits.astype(float)
    count, k = X.shape[0], X.shape[2]
    beta = np.zeros((count, k))
    done = np.zeros(count, dtype=bool)
    it = 0
    for it in range(1, NEWTON_MAX_ITER + 1):
        act = ~done
        if not act.any():
            break
        Xa, ya, ba = X[act], y[act], beta[act]
        p = expit(np.einsum("gsk,gk->gs", Xa, ba))
        grad = np.einsum("gsk,gs->gk", Xa, ya - p)
        small = np.abs(grad).max(axis=1) < NEWTON_TOL
        hess = np.einsum("gsk,gs,gsl->gkl", Xa, p * (1.0 - p), Xa)
        # pinv copes with unidentified coefficients (all-zero change columns)
        step = np.einsum("gkl,gl->gk", np.linalg.pinv(hess), grad)
        base = _log_pseudo_likelihood(Xa, ya, ba)
        t = np.ones(len(ba))
        for _ in range(30):
            bad = _log_pseudo_likelihood(Xa, ya, ba + t[:, None] * step) < base - 1e-12
            if not bad.any():
                break
            t[bad] *= 0.5
        new = np.where(small[:, None], ba, ba + t[:, None] * step)
        idx = np.flatnonzero(act)
        beta[idx] = new
        done[idx[small]] = True
        # diverging fits: stop once a coefficient is out of range
        done[idx[np.abs(new).max(axis=1) > COEF_CLAMP]] = True
    # separated data: the gradient vanishes only at infinity, so a "converged"
    # fit with pseudo-likelihood ~1 is pushed out to the clamp along its direction
    separated = _log_pseudo_likelihood(X, y, beta) > -1e-6
    size = np.abs(beta).max(axis=1)
    grow = separated & (size > 0)
    beta[grow] *= (2 * COEF_CLAMP / size[grow])[:, None]
    clamped = separated | (np.abs(beta).max(axis=1) > COEF_CLAMP)
    ok = done & ~clamped
    beta = np.clip(beta, -COEF_CLAMP, COEF_CLAMP)
    return MpleFit(beta, ok, ~ok, it)


def baseline_param(x: Graph, generator: Source, L: int = 1000, m: int = 200, alpha: float = 0.05, seed: int = 0,
                   terms: Sequence[str] = ("edges", "two_stars", "triangles"), scaled: bool = False) -> TestReport:
    """Mahalanobis distance of the observed MPLE from the MPLEs of generator samples."""
    _check_count("L", L)
    _check_count("m", m)
    source = as_source(generator)
    seeds = _baseline_seeds(seed, True)
    fit_graphs = _draw(source, L, seeds["fit_samples"], x.n)
    nulls = _draw(source, m, seeds["null_samples"], x.n)
    ref = mple(fit_graphs, terms, scaled)
    obs = mple([x], terms, scaled)
    sim = mple(nulls, terms, scaled)
    mean, cov = _moments(ref.coef)
    taus = [mahalanobis(b, mean, cov) for b in sim.coef]
    diagnostics = {
        "terms": list(terms),
        "observed_coef": obs.coef[0].tolist(),
        "observed_degenerate": bool(obs.degenerate[0]),
        "degenerate_fit_samples": int(ref.degenerate.sum()),
        "degenerate_null_samples": int(sim.degenerate.sum()),
    }
    return monte_carlo_report("param", mahalanobis(obs.coef[0], mean, cov), taus, alpha, seeds, diagnostics)


BASELINES = {
    "deg": baseline_deg,
    "tv_deg": baseline_tv_deg,
    "mddeg": baseline_mddeg,
    "param": baseline_param,
}


def run_baseline(name: str, x: Graph, generator: Source, L: int = 1000, m: int = 200, alpha: float = 0.05,
                 seed: int = 0) -> TestReport:
    if name not in BASELINES:
        raise ValueError(f"unknown baseline {name!r}; choose from {sorted(BASELINES)}")
    if name == "deg":
        return baseline_deg(x, generator, m, alpha, seed)
    return BASELINES[name](x, generator, L, m, alpha, seed)
