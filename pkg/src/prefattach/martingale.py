"""Martingales M_n^(k) = a_n^(k) sum_j b_j^(k) (N_n(j) - nu_n(j)) along sample paths.

The centring means nu_n(j) come from the exact mean recursion, never from
simulation.  Increments are computed directly from count changes instead of
differencing the values: a_n^(k) grows like n^((k+delta)/(2+delta)), and
differencing large values would cancel badly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import DegreeCensus, GraphState, degree_census
from .oracle import exact_cond_step
from .theory import a_coef, b_coef, check_delta, mean_recursion, r_y

__all__ = [
    "MartingalePath",
    "martingale_path",
    "martingale_value",
    "k1_martingale",
    "mg_one_step_residual",
    "scaled_increment_array",
    "conditional_covariance_sum",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MartingalePath:
    """Values M_n^(k) for stages ``start..n_max`` and increments d_m, m > start.

    ``values`` is ``values[0] + cumsum(increments)``, so the two always agree.
    """

    k: int
    delta: float
    start: int
    values: np.ndarray = field(repr=False)
    increments: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return self.start + len(self.values) - 1

    def value(self, n: int) -> float:
        return float(self.values[n - self.start])

    def increment(self, m: int) -> float:
        """d_m = M_m - M_{m-1}."""
        return float(self.increments[m - self.start - 1])


def _counts_matrix(census_series, k: int, first_stage: int) -> tuple[np.ndarray, int]:
    """Stage-indexed count array with at least ``k`` columns, and its first stage."""
    if isinstance(census_series, np.ndarray):
        counts = np.asarray(census_series)
        if counts.ndim != 2 or counts.shape[1] < k:
            raise ValueError(f"count array needs shape (stages, >= {k})")
        return counts[:, :k].astype(float), first_stage
    series: Sequence[DegreeCensus] = list(census_series)
    if not series:
        raise ValueError("empty census series")
    s0 = series[0].stage
    for offset, c in enumerate(series):
        if c.stage != s0 + offset:
            raise ValueError("census series must cover consecutive stages")
    return np.array([[c[j] for j in range(1, k + 1)] for c in series], dtype=float), s0


def martingale_value(counts: Sequence[float], n: int, k: int, delta: float, nu: Sequence[float]) -> float:
    """M_n^(k) from the census ``counts[j - 1] = N_n(j)`` and means ``nu[j - 1]``."""
    s = math.fsum(b_coef(j, k, delta) * (counts[j - 1] - nu[j - 1]) for j in range(1, k + 1))
    return a_coef(n, k, delta) * s


def martingale_path(census_series, k: int, delta: float, *, first_stage: int = 1) -> MartingalePath:
    """M^(k) along one path.

    ``census_series`` is either a list of :class:`DegreeCensus` for
    consecutive stages, or an integer array whose row ``r`` is the census at
    stage ``first_stage + r`` (as returned by ``census_trajectory``).
    """
    delta = check_delta(delta)
    if k < 1:
        raise ValueError("k must be >= 1")
    counts, s0 = _counts_matrix(census_series, k, first_stage)
    n_max = s0 + counts.shape[0] - 1
    if s0 > k or n_max < k:
        raise ValueError(f"census series must cover stage {k}; got stages {s0}..{n_max}")
    nu = mean_recursion(n_max, max(k, 2), delta).values[k - 1 :, :k]
    counts = counts[k - s0 :]
    b = np.array([b_coef(j, k, delta) for j in range(1, k + 1)])
    centred = (counts - nu) @ b
    stages = np.arange(k, n_max + 1)
    a = np.array([a_coef(int(m), k, delta) for m in stages])
    # d_m = a_m [(S_m - S_{m-1}) + (k + delta) / D_{m-1} S_{m-1}],  D_m = m(2+delta) + 1 + delta
    prev = stages[:-1]
    drift = (k + delta) / (prev * (2.0 + delta) + 1.0 + delta)
    increments = a[1:] * (np.diff(centred) + drift * centred[:-1])
    m0 = a[0] * centred[0]
    values = np.concatenate(([m0], m0 + np.cumsum(increments)))
    return MartingalePath(k, delta, k, values, increments)


def k1_martingale(census_series, delta: float, *, first_stage: int = 1) -> np.ndarray:
    """(N_n(1) - nu_n) / prod_{j<n} w_j for every stage in the series.

    The degree-1 construction, written with the weights w_j = j / (j + gamma).
    """
    delta = check_delta(delta)
    counts, s0 = _counts_matrix(census_series, 1, first_stage)
    n_max = s0 + counts.shape[0] - 1
    nu = mean_recursion(n_max, 2, delta).values[s0 - 1 :, 0]
    gamma = (1.0 + delta) / (2.0 + delta)
    j = np.arange(1, n_max)
    log_w = np.log(j) - np.log(j + gamma)
    prod_w = np.exp(np.concatenate(([0.0], np.cumsum(log_w))))[s0 - 1 :]
    return (counts[:, 0] - nu) / prod_w


def mg_one_step_residual(state: GraphState, k: int, delta: float) -> float:
    """|E[M_{n+1}^(k) | G_n] - M_n^(k)|, with the expectation taken exactly."""
    delta = check_delta(delta)
    n = state.n
    if n < k:
        raise ValueError(f"stage {n} is below k={k}")
    nu = mean_recursion(n + 1, max(k, 2), delta).values

    def m_at(s: GraphState) -> float:
        c = degree_census(s, k).counts
        return martingale_value(c, s.n, k, delta, nu[s.n - 1])

    return abs(exact_cond_step(state, delta, m_at) - m_at(state))


def scaled_increment_array(paths: Sequence[MartingalePath], n: int) -> np.ndarray:
    """X[m - k - 1, j - 1] = d_m^(j) / (a_n^(j) sqrt(n)) for m = k+1..n, j = 1..k.

    ``paths[j - 1]`` must be the path for degree index ``j``.
    """
    k = len(paths)
    for j, p in enumerate(paths, start=1):
        if p.k != j:
            raise ValueError("paths must be ordered by degree index 1..k")
        if p.n_max < n:
            raise ValueError(f"path {j} stops at stage {p.n_max} < {n}")
    out = np.empty((n - k, k))
    for j, p in enumerate(paths, start=1):
        lo = k + 1 - p.start - 1
        out[:, j - 1] = p.increments[lo : lo + n - k] / (a_coef(n, j, p.delta) * math.sqrt(n))
    return out


def conditional_covariance_sum(trajectory: np.ndarray, k: int, delta: float) -> np.ndarray:
    """Sum over m of E[X_{n,m,i} X_{n,m,j} | F_{m-1}] along one path, i, j <= k.

    ``trajectory`` rows are censuses at stages 1..n with at least ``k + 1``
    columns.  The limit should approach R_Y(i, j); the rate is not known,
    so callers treat the comparison as informational only.
    """
    delta = check_delta(delta)
    n = trajectory.shape[0]
    if trajectory.shape[1] < k + 1:
        raise ValueError(f"trajectory needs at least {k + 1} columns")
    kk = k + 1
    b = np.array([[b_coef(d, i, delta) for d in range(1, kk + 2)] for i in range(1, k + 1)])
    # value of sum_d b_d^(i) B(d) on each outcome class:
    # self-loop or degree-1 target -> b_2; degree m >= 2 -> b_1 - b_m + b_{m+1}
    # (degree > kk lumped, where the bracket is b_1)
    outcome = np.empty((k, kk + 1))
    outcome[:, 0] = b[:, 1]
    for m in range(2, kk + 1):
        outcome[:, m - 1] = b[:, 0] - b[:, m - 1] + b[:, m]
    outcome[:, kk] = b[:, 0]
    total = np.zeros((k, k))
    for m in range(max(k, 1), n):
        counts = trajectory[m - 1, :kk].astype(float)
        denom = m * (2.0 + delta) + 1.0 + delta
        probs = np.empty(kk + 1)
        probs[0] = (1.0 + delta + (1.0 + delta) * counts[0]) / denom
        probs[1:kk] = (np.arange(2, kk + 1) + delta) * counts[1:kk] / denom
        probs[kk] = max(0.0, 1.0 - probs[:kk].sum())
        mean = outcome @ probs
        cov = (outcome * probs) @ outcome.T - np.outer(mean, mean)
        a_next = np.array([a_coef(m + 1, i, delta) for i in range(1, k + 1)])
        total += np.outer(a_next, a_next) * cov
    a_n = np.array([a_coef(n, i, delta) for i in range(1, k + 1)])
    v = total / (n * np.outer(a_n, a_n))
    if log.isEnabledFor(logging.INFO):
        ry = np.array([[r_y(i, j, delta) for j in range(1, k + 1)] for i in range(1, k + 1)])
        log.info("conditional covariance sum / R_Y at n=%d:\n%s", n, v / ry)
    return v
