"""Synthetic power experiments on the E2ST model.

Alternatives perturb the two-star coefficient of the null model.  Each trial
draws one observed graph from the alternative by Glauber dynamics and tests
it against the null model used as a black-box generator.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .kernel import KernelSpec
from .models import ErgmSpec, glauber_sample
from .parallel import pmap
from .sources import ErgmSource, MemoSource, derive_seed
from .testing import resolve_kind, run_agrasst_test, run_baseline

CSV_HEADER = ("beta2", "kind", "B", "trials", "rejection_rate", "stderr", "runtime_ms")
DEFAULT_PERTURBATIONS = (-0.6, -0.4, -0.2, 0.0, 0.2)
TWO_STAR = 1  # position of the two-star term in E2ST


@dataclass
class PowerRow:
    beta2: float
    kind: str
    B: int | None
    trials: int
    rejections: int
    runtime_ms: float

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.trials

    @property
    def stderr(self) -> float:
        r = self.rejection_rate
        return math.sqrt(r * (1.0 - r) / self.trials)

    def as_tuple(self) -> tuple:
        B = "full" if self.B is None else self.B
        return (f"{self.beta2:g}", self.kind, B, self.trials, f"{self.rejection_rate:.4f}", f"{self.stderr:.4f}",
                f"{self.runtime_ms:.1f}")


def to_csv(rows: Iterable[PowerRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_tuple())
    return buf.getvalue()


@dataclass(frozen=True)
class TrialConfig:
    null_spec: ErgmSpec
    beta2: float
    kinds: tuple  # AgraSSt statistic kinds, may include "cumdeg"
    baselines: tuple
    B: int | None
    L: int
    m: int
    alpha: float
    kernel: KernelSpec
    chains: int
    alternative: str = "greater"


def observed_graph(null_spec: ErgmSpec, beta2: float, seed: int):
    """One draw from the perturbed model (single Glauber chain, default burn-in)."""
    alt = null_spec.with_coef(TWO_STAR, beta2)
    return glauber_sample(alt, 1, seed=seed)[0]


def run_trial(config: TrialConfig, seed: int) -> dict:
    """All requested tests on one observed graph; ``{method: (reject, runtime_ms)}``.

    Every method sees the same observed graph and the same generator draws.
    """
    x = observed_graph(config.null_spec, config.beta2, derive_seed(seed, 99))
    source = MemoSource(ErgmSource(config.null_spec, chains=config.chains))
    out = {}
    for kind in config.kinds:
        start = time.perf_counter()
        rep = run_agrasst_test(x, source, kind, config.kernel, config.B, config.L, config.m, config.alpha, seed,
                               alternative=config.alternative)
        out[kind] = (rep.reject, 1000 * (time.perf_counter() - start))
    for name in config.baselines:
        start = time.perf_counter()
        rep = run_baseline(name, x, source, config.L, config.m, config.alpha, seed)
        out[name] = (rep.reject, 1000 * (time.perf_counter() - start))
    return out


def _trial_job(args):
    config, seed = args
    return run_trial(config, seed)


def power_experiment(
    null_spec: ErgmSpec | None = None,
    perturbations: Sequence[float] = DEFAULT_PERTURBATIONS,
    trials: int = 100,
    L: int = 1000,
    B: int | None = 200,
    m: int = 200,
    alpha: float = 0.05,
    seed: int = 0,
    kinds: Sequence[str] = ("edges",),
    baselines: Sequence[str] = (),
    kernel: KernelSpec | None = None,
    chains: int = 50,
    threads: int | None = 1,
    alternative: str = "greater",
) -> list[PowerRow]:
    """Rejection rates per ``beta2`` and method (AgraSSt kinds, then baselines)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    null_spec = null_spec or ErgmSpec.e2st()
    kernel = kernel or KernelSpec()
    for kind in kinds:
        resolve_kind(kind)
    rows = []
    for p_idx, beta2 in enumerate(perturbations):
        config = TrialConfig(null_spec, float(beta2), tuple(kinds), tuple(baselines), B, L, m, alpha, kernel, chains,
                             alternative)
        jobs = [(config, derive_seed(seed, p_idx, t)) for t in range(trials)]
        results = pmap(_trial_job, jobs, threads)
        for method in list(kinds) + list(baselines):
            rejections = sum(bool(r[method][0]) for r in results)
            runtime = float(np.mean([r[method][1] for r in results]))
            rows.append(PowerRow(float(beta2), method, B, trials, rejections, runtime))
    return rows


def estimator_comparison(
    kinds: Sequence[str] = ("edges", "sumdeg", "cumdeg", "bideg", "d3", "tri"),
    perturbations: Sequence[float] = DEFAULT_PERTURBATIONS,
    **kwargs,
) -> list[PowerRow]:
    """Power of AgraSSt per conditioning statistic and estimation mode."""
    return power_experiment(kinds=kinds, perturbations=perturbations, **kwargs)


def resampling_sweep(
    B_values: Sequence[int | None] = (5, 10, 20, 50, 100, 200),
    beta2: float = -0.2,
    seed: int = 0,
    **kwargs,
) -> list[PowerRow]:
    """Power at one alternative for several resampling sizes (``None`` = full statistic).

    Every ``B`` reuses the same trial seeds, so the sweep compares sizes on
    identical observed graphs and generator draws.
    """
    rows = []
    for B in B_values:
        rows.extend(power_experiment(perturbations=(beta2,), B=B, seed=seed, **kwargs))
    return rows


def is_monotone(rates: Sequence[float], slack: float = 0.05) -> bool:
    """Non-decreasing up to ``slack``: no rate falls more than ``slack`` below an earlier one."""
    best = -np.inf
    for r in rates:
        if r < best - slack:
            return False
        best = max(best, r)
    return True
