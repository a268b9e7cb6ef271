"""Exact distribution of the degree census for small graphs.

States are merged by degree multiset: every quantity of interest depends on
the graph only through its census, and merging collapses the ``n!`` labelled
paths to 30 partitions at ``n = 9``.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .model import GraphState
from .theory import check_delta

__all__ = [
    "DEFAULT_BUDGET",
    "OracleBudgetError",
    "WeightedState",
    "ExactDistribution",
    "enumerate_stages",
    "exact_mean",
    "exact_cov",
    "exact_cond_step",
]

DEFAULT_BUDGET = 9


class OracleBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedState:
    state: GraphState
    probability: float


@dataclass(frozen=True)
class ExactDistribution:
    """Law of the census at one stage.

    ``support`` maps the census vector ``(N_n(1), ..., N_n(n + 1))`` to its
    probability; degrees never exceed ``n + 1`` at stage ``n``.
    """

    stage: int
    delta: float
    support: dict[tuple[int, ...], float]

    @property
    def k_max(self) -> int:
        return self.stage + 1

    def total(self) -> float:
        return float(np.sum(list(self.support.values())))

    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        keys = np.array(list(self.support.keys()), dtype=float)
        probs = np.array(list(self.support.values()))
        return keys, probs

    def mean(self, k: int) -> float:
        if k > self.k_max:
            return 0.0
        keys, probs = self._arrays()
        return float(probs @ keys[:, k - 1])

    def cov(self, i: int, j: int) -> float:
        if max(i, j) > self.k_max:
            return 0.0
        keys, probs = self._arrays()
        x, y = keys[:, i - 1], keys[:, j - 1]
        return float(probs @ ((x - probs @ x) * (y - probs @ y)))

    def states(self) -> list[WeightedState]:
        """One representative labelled graph per census, with its probability."""
        out = []
        for census, prob in self.support.items():
            degrees = [k for k, c in enumerate(census, start=1) for _ in range(c)]
            out.append(WeightedState(GraphState.from_degrees(degrees, self.delta), prob))
        return out

    def to_dict(self) -> dict:
        rows = sorted(self.support.items())
        return {
            "stage": self.stage,
            "support": [{"census": list(c), "probability": p} for c, p in rows],
        }


def _census_of(multiset: tuple[int, ...], width: int) -> tuple[int, ...]:
    counts = [0] * width
    for d in multiset:
        counts[d - 1] += 1
    return tuple(counts)


def _expand(dist: dict[tuple[int, ...], float], n: int, delta: float) -> dict[tuple[int, ...], float]:
    denom = n * (2.0 + delta) + 1.0 + delta
    nxt: dict[tuple[int, ...], float] = defaultdict(float)
    for degrees, prob in dist.items():
        for d, mult in Counter(degrees).items():
            grown = list(degrees)
            grown.remove(d)
            grown += [d + 1, 1]
            nxt[tuple(sorted(grown))] += prob * mult * (d + delta) / denom
        nxt[tuple(sorted(degrees + (2,)))] += prob * (1.0 + delta) / denom
    return dict(nxt)


@lru_cache(maxsize=64)
def _enumerate(n_max: int, delta: float) -> tuple[ExactDistribution, ...]:
    dist: dict[tuple[int, ...], float] = {(2,): 1.0}
    stages = []
    for n in range(1, n_max + 1):
        support = {_census_of(ms, n + 1): p for ms, p in dist.items()}
        stages.append(ExactDistribution(n, delta, support))
        if n < n_max:
            dist = _expand(dist, n, delta)
    return tuple(stages)


def enumerate_stages(
    n_max: int, delta: float, *, budget: int = DEFAULT_BUDGET
) -> list[ExactDistribution]:
    """Exact census distributions for stages 1..n_max (list index = stage - 1).

    ``budget`` caps ``n_max`` to keep the oracle sub-second; raise it
    explicitly for larger runs.
    """
    delta = check_delta(delta)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > budget:
        raise OracleBudgetError(f"n_max={n_max} exceeds the enumeration budget {budget}")
    return list(_enumerate(int(n_max), delta))


def exact_mean(n: int, k: int, delta: float, *, budget: int = DEFAULT_BUDGET) -> float:
    return enumerate_stages(n, delta, budget=budget)[n - 1].mean(k)


def exact_cov(n: int, i: int, j: int, delta: float, *, budget: int = DEFAULT_BUDGET) -> float:
    return enumerate_stages(n, delta, budget=budget)[n - 1].cov(i, j)


def exact_cond_step(
    state: GraphState, delta: float, functional: Callable[[GraphState], float]
) -> float:
    """E[functional(G_{n+1}) | G_n = state], summing over all n + 1 outcomes."""
    delta = check_delta(delta)
    n = state.n
    denom = n * (2.0 + delta) + 1.0 + delta
    terms = []
    for v in range(1, n + 1):
        nxt = state.copy()
        nxt.attach(v)
        terms.append((state.degrees[v - 1] + delta) / denom * functional(nxt))
    nxt = state.copy()
    nxt.attach(None)
    terms.append((1.0 + delta) / denom * functional(nxt))
    return math.fsum(terms)
