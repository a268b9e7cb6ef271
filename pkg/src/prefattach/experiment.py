"""Replicated growth experiments against the Gaussian limit of the degree counts.

Replica ``r`` is grown on stream ``r`` of the master seed, so results do not
depend on how replicas are spread over workers.  Bootstrap resampling and
the Cramer-Wold projection vectors draw from two reserved stream ids at the
top of the 64-bit range.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from multiprocessing import get_all_start_methods, get_context
from typing import IO, Literal, NamedTuple

import numpy as np
from scipy.special import kolmogorov, ndtr

from . import _kernels
from .model import replica_censuses, stream_rng
from .theory import check_delta, pk_array, sigma_matrix

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "ScaledSample",
    "Moments",
    "ExperimentReport",
    "ResourceBudgetError",
    "empirical_moments",
    "ks_normal",
    "centering_info",
    "run_experiment",
]

SCHEMA_VERSION = 1

KS_LEVEL = 0.01
SKEW_MAX = 0.2
KURT_MAX = 0.4
COV_SE_MAX = 5.0
VAR_REL_MAX = 0.10
MEAN_SD_MAX = 4.0
MIN_GATED_REPLICAS = 20

BOOTSTRAP_STREAM = 2**64 - 1
PROJECTION_STREAM = 2**64 - 2


class ResourceBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    delta: float
    n: int
    replicas: int
    k_max: int = 3
    centering: Literal["exact_mean", "limit_pk"] = "exact_mean"
    master_seed: int = 0
    workers: int = 1
    bootstrap: int = 200
    projections: int = 3
    step_budget: int = 2 * 10**9

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", check_delta(self.delta))
        if self.replicas < 2:
            raise ValueError("replicas must be >= 2")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.n < self.k_max:
            raise ValueError(f"n={self.n} must be >= k_max={self.k_max}")
        if self.centering not in ("exact_mean", "limit_pk"):
            raise ValueError(f"unknown centering {self.centering!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.replicas * (self.n - 1) > self.step_budget:
            raise ResourceBudgetError(
                f"replicas * n = {self.replicas * self.n} exceeds the step budget {self.step_budget}"
            )

    def echo(self) -> dict:
        """Fields that determine the results (``workers`` is excluded on purpose)."""
        d = asdict(self)
        d.pop("workers")
        return d


@dataclass(frozen=True)
class ScaledSample:
    """T_n(k) = (N_n(k) - n * center_k) / sqrt(n); row r is replica r."""

    n: int
    center: np.ndarray
    values: np.ndarray = field(repr=False)

    @classmethod
    def from_counts(cls, counts: np.ndarray, n: int, center: np.ndarray) -> "ScaledSample":
        values = (counts - n * center) / math.sqrt(n)
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite scaled values")
        return cls(n, np.asarray(center, dtype=float), values)

    @property
    def replicas(self) -> int:
        return self.values.shape[0]

    def write_csv(self, fh: IO[str]) -> None:
        fh.write("replica,k,t_value\n")
        for r, row in enumerate(self.values):
            for k, t in enumerate(row, start=1):
                fh.write(f"{r},{k},{float(t)!r}\n")


class Moments(NamedTuple):
    """Per-column mean, covariance (divisor R - 1), skewness and excess kurtosis.

    Skewness and kurtosis are NaN for columns with zero spread.
    """

    mean: np.ndarray
    cov: np.ndarray
    skew: np.ndarray
    ex_kurt: np.ndarray

    @property
    def undefined_shape(self) -> np.ndarray:
        return np.isnan(self.skew)


def empirical_moments(samples) -> Moments:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    r = x.shape[0]
    if r < 2:
        raise ValueError("need at least 2 samples")
    mean = x.mean(axis=0)
    c = x - mean
    cov = c.T @ c / (r - 1)
    m2 = (c**2).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(m2 > 0, (c**3).mean(axis=0) / m2**1.5, np.nan)
        kurt = np.where(m2 > 0, (c**4).mean(axis=0) / m2**2 - 3.0, np.nan)
    return Moments(mean, cov, skew, kurt)


def ks_normal(samples, sigma_sq: float) -> tuple[float, float]:
    """One-sample KS test against N(0, sigma_sq); p-value from the limiting law."""
    if not sigma_sq > 0:
        raise ValueError(f"sigma_sq must be > 0, got {sigma_sq}")
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    r = len(x)
    if r < MIN_GATED_REPLICAS:
        raise ValueError(f"KS test needs at least {MIN_GATED_REPLICAS} samples, got {r}")
    cdf = ndtr(x / math.sqrt(sigma_sq))
    i = np.arange(1, r + 1)
    d = float(max(np.max(i / r - cdf), np.max(cdf - (i - 1) / r)))
    return d, float(kolmogorov(math.sqrt(r) * d))


def centering_info(n: int, k_max: int, delta: float) -> dict:
    """Exact means nu_n(k), p_k, the limit_pk shift and K_obs = max_m |nu_m(k) - m p_k|."""
    kk = max(k_max, 2)
    p = pk_array(kk, delta)
    nu, dev = _kernels.mean_stream(int(n), kk, float(delta), p)
    return {
        "nu": nu[:k_max],
        "p": p[:k_max],
        "shift": (nu[:k_max] - n * p[:k_max]) / math.sqrt(n),
        "k_obs": dev[:k_max],
    }


def _censuses_block(args) -> np.ndarray:
    delta, n, k_max, seed, lo, hi = args
    return replica_censuses(delta, n, k_max, seed, range(lo, hi))


def simulate_counts(config: ExperimentConfig) -> np.ndarray:
    """Final censuses, row r from stream r; identical for any worker count."""
    c = config
    if c.workers == 1:
        return replica_censuses(c.delta, c.n, c.k_max, c.master_seed, range(c.replicas))
    size = max(1, math.ceil(c.replicas / (4 * c.workers)))
    tasks = [
        (c.delta, c.n, c.k_max, c.master_seed, lo, min(lo + size, c.replicas))
        for lo in range(0, c.replicas, size)
    ]
    # fork keeps scripts without a __main__ guard working; spawn elsewhere
    method = "fork" if "fork" in get_all_start_methods() else "spawn"
    with ProcessPoolExecutor(c.workers, mp_context=get_context(method)) as pool:
        blocks = list(pool.map(_censuses_block, tasks))
    return np.concatenate(blocks, axis=0)


def _bootstrap_cov_se(x: np.ndarray, resamples: int, seed: int) -> np.ndarray:
    rng = stream_rng(seed, BOOTSTRAP_STREAM)
    r, k = x.shape
    covs = np.empty((resamples, k, k))
    for b in range(resamples):
        xb = x[rng.integers(0, r, size=r)]
        c = xb - xb.mean(axis=0)
        covs[b] = c.T @ c / (r - 1)
    return covs.std(axis=0, ddof=1)


def _projection_vectors(k: int, count: int, seed: int) -> np.ndarray:
    v = stream_rng(seed, PROJECTION_STREAM).standard_normal((count, k))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    sample: ScaledSample = field(repr=False)
    moments: Moments = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    centering: dict = field(repr=False)
    ks: list[dict] = field(default_factory=list)
    cov_se: np.ndarray | None = field(default=None, repr=False)
    cov_deviation_se: np.ndarray | None = field(default=None, repr=False)
    projections: list[dict] = field(default_factory=list)
    verdicts: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def gated(self) -> bool:
        return bool(self.verdicts)

    @property
    def passed(self) -> bool:
        """True iff every gate passed; an ungated run passes trivially."""
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        m = self.moments
        return _jsonable(
            {
                "schema_version": SCHEMA_VERSION,
                "config": self.config.echo(),
                "theory": {"sigma": self.sigma},
                "centering": {
                    "mode": self.config.centering,
                    "center": self.sample.center,
                    **self.centering,
                    "shift_bound": self.centering["k_obs"] / math.sqrt(self.config.n),
                },
                "moments": {"mean": m.mean, "cov": m.cov, "skew": m.skew, "ex_kurt": m.ex_kurt},
                "ks": self.ks,
                "cov_se": self.cov_se,
                "cov_deviation_se": self.cov_deviation_se,
                "cramer_wold": self.projections,
                "gated": self.gated,
                "verdicts": self.verdicts,
                "passed": self.passed,
                "notes": self.notes,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    c = config
    counts = simulate_counts(c)
    info = centering_info(c.n, c.k_max, c.delta)
    center = info["nu"] / c.n if c.centering == "exact_mean" else info["p"]
    sample = ScaledSample.from_counts(counts, c.n, center)
    moments = empirical_moments(sample.values)
    sigma = sigma_matrix(c.k_max, c.delta)
    report = ExperimentReport(c, sample, moments, sigma, info)

    if c.replicas < MIN_GATED_REPLICAS:
        report.notes.append(
            f"replicas={c.replicas} < {MIN_GATED_REPLICAS}: moments reported, no tests run"
        )
        return report

    x = sample.values
    v = report.verdicts
    sd = np.sqrt(np.diag(sigma))
    for k in range(1, c.k_max + 1):
        d, p = ks_normal(x[:, k - 1], sigma[k - 1, k - 1])
        report.ks.append({"k": k, "statistic": d, "p_value": p})
        v[f"ks_k{k}"] = p > KS_LEVEL
        v[f"skew_k{k}"] = bool(abs(moments.skew[k - 1]) < SKEW_MAX)
        v[f"ex_kurt_k{k}"] = bool(abs(moments.ex_kurt[k - 1]) < KURT_MAX)
        rel = moments.cov[k - 1, k - 1] / sigma[k - 1, k - 1] - 1.0
        v[f"variance_k{k}"] = bool(abs(rel) < VAR_REL_MAX)
        if c.centering == "exact_mean":
            v[f"mean_k{k}"] = bool(abs(moments.mean[k - 1]) < MEAN_SD_MAX * sd[k - 1] / math.sqrt(c.replicas))
        else:
            v[f"shift_bounded_k{k}"] = bool(
                abs(info["shift"][k - 1]) <= info["k_obs"][k - 1] / math.sqrt(c.n)
            )

    se = _bootstrap_cov_se(x, c.bootstrap, c.master_seed)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = (moments.cov - sigma) / se
    report.cov_se = se
    report.cov_deviation_se = dev
    v["covariance_se"] = bool(np.all(np.abs(dev) < COV_SE_MAX))

    if c.k_max >= 2:
        for idx, b in enumerate(_projection_vectors(c.k_max, c.projections, c.master_seed)):
            var = float(b @ sigma @ b)
            d, p = ks_normal(x @ b, var)
            report.projections.append({"weights": b, "variance": var, "statistic": d, "p_value": p})
            v[f"cramer_wold_{idx}"] = p > KS_LEVEL
    return report


def default_workers() -> int:
    """Worker count from ``PREFATTACH_WORKERS``, else 1."""
    raw = os.environ.get("PREFATTACH_WORKERS", "").strip()
    if not raw:
        return 1
    w = int(raw)
    if w < 1:
        raise ValueError("PREFATTACH_WORKERS must be >= 1")
    return w
