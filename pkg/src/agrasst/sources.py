"""Graph generators as seen by the tests: something that hands out graphs.

A source is either a callable ``source(count, seed) -> list[Graph]`` or a
finite sequence of graphs (e.g. an archive written by an external deep
generator), which is consumed front to back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .graph import Graph
from .models import ErgmSpec, bernoulli_sample, glauber_sample

Source = Union[Callable[[int, int], list], Sequence[Graph]]


class InsufficientSamplesError(ValueError):
    pass


def derive_seed(master: int, *path: int) -> int:
    """Deterministic 63-bit child seed of ``master`` along ``path``."""
    state = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *path]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


@dataclass(frozen=True)
class ErgmSource:
    """Glauber samples from an ERGM, ``chains`` chains in parallel."""

    spec: ErgmSpec
    chains: int = 50
    burn_in: int | None = None
    thinning: int | None = None

    @property
    def n(self) -> int:
        return self.spec.n

    def __call__(self, count: int, seed) -> list[Graph]:
        return glauber_sample(self.spec, count, self.burn_in, self.thinning, seed, chains=self.chains)


@dataclass(frozen=True)
class BernoulliSource:
    n: int
    p: float

    def __call__(self, count: int, seed) -> list[Graph]:
        return bernoulli_sample(self.n, self.p, count, seed)


class SampleStream:
    """Hands out graphs of a fixed list in order; raises when exhausted."""

    def __init__(self, graphs: Sequence[Graph]):
        self.graphs = list(graphs)
        self.position = 0

    def __call__(self, count: int, seed=None) -> list[Graph]:
        if self.position + count > len(self.graphs):
            raise InsufficientSamplesError(
                f"sample archive has {len(self.graphs)} graphs; {self.position + count} needed"
            )
        out = self.graphs[self.position : self.position + count]
        self.position += count
        return out


def as_source(generator: Source):
    if callable(generator):
        return generator
    return SampleStream(generator)


class MemoSource:
    """Caches draws by ``(count, seed)`` so several tests can share them."""

    def __init__(self, source):
        self.source = source
        self._cache: dict = {}

    def __call__(self, count: int, seed) -> list[Graph]:
        key = (count, seed)
        if key not in self._cache:
            self._cache[key] = list(self.source(count, seed))
        return self._cache[key]
