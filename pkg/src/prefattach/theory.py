"""Closed-form limits for the degree counts of the preferential attachment graph.

Everything here is a pure function of ``delta`` and integer indices.  Gamma
ratios are evaluated in log space with explicit sign tracking, so nothing
overflows for ``i + j <= 60`` and ``delta <= 10``.

Index conventions: degrees ``k`` and coefficient indices ``j`` are 1-based, as
in the formulas.  Matrices returned as numpy arrays are 0-based, so entry
``[i - 1, j - 1]`` holds the value for ``(i, j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "NormalizerSequence",
    "CoefficientTable",
    "MeanTable",
    "CovarianceTheory",
    "check_delta",
    "attachment_exponent",
    "c_norm",
    "pk",
    "pk_array",
    "tail_mass",
    "sigma1_sq",
    "b_coef",
    "a_coef",
    "coefficient_table",
    "mean_recursion",
    "a_cov",
    "r_y",
    "coeff_matrices",
    "sigma_matrix",
    "r_z",
    "simplify_closed_form",
    "zero_identity_check",
    "simplify_identity_check",
    "ident_b_residual",
    "covariance_theory",
]

# B_{2r} / (2r (2r - 1)) for r = 1..6 (Stirling series for log-gamma)
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
)
_ASYMPTOTIC_FROM = 30.0


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not (math.isfinite(delta) and delta > -1.0):
        raise ValueError(f"delta must be > -1, got {delta!r}")
    return delta


def _lgamma_ratio(x: float, a: float, b: float) -> float:
    """log(Gamma(x + a) / Gamma(x + b)) without cancellation for large x.

    The naive ``lgamma(x + a) - lgamma(x + b)`` loses roughly ``x log x``
    ulps; for large ``x`` the Stirling series is differenced term by term.
    """
    if x < _ASYMPTOTIC_FROM or abs(a) > 0.25 * x or abs(b) > 0.25 * x:
        return math.lgamma(x + a) - math.lgamma(x + b)
    za, zb = x + a, x + b
    out = (a - b) * math.log(x)
    out += (za - 0.5) * math.log1p(a / x) - (zb - 0.5) * math.log1p(b / x)
    out -= a - b
    ia, ib = 1.0 / za, 1.0 / zb
    pa, pb = ia, ib
    ia2, ib2 = ia * ia, ib * ib
    for coef in _STIRLING:
        out += coef * (pa - pb)
        pa *= ia2
        pb *= ib2
    return out


def attachment_exponent(delta: float) -> float:
    """gamma = (1 + delta) / (2 + delta), the exponent in ``prod w_j ~ n^-gamma``."""
    delta = check_delta(delta)
    return (1.0 + delta) / (2.0 + delta)


def _log_c(delta: float) -> float:
    return math.log(2.0 + delta) + math.lgamma(3.0 + 2.0 * delta) - math.lgamma(1.0 + delta)


def c_norm(delta: float) -> float:
    """Normalising constant c(delta) = (2 + delta) Gamma(3 + 2 delta) / Gamma(1 + delta)."""
    delta = check_delta(delta)
    return math.exp(_log_c(delta))


def _log_pk(k: int, delta: float) -> float:
    return _log_c(delta) + math.lgamma(k + delta) - math.lgamma(k + 3.0 + 2.0 * delta)


@lru_cache(maxsize=65536)
def pk(k: int, delta: float) -> float:
    """Limiting fraction of nodes with degree ``k``."""
    if k < 1:
        raise ValueError(f"degree k must be >= 1, got {k}")
    delta = check_delta(delta)
    return math.exp(_log_pk(k, delta))


def pk_array(k_max: int, delta: float) -> np.ndarray:
    """``[p_1, ..., p_kmax]`` as a float array."""
    return np.array([pk(k, delta) for k in range(1, k_max + 1)])


def tail_mass(kk: int, delta: float) -> float:
    """Sum over m > kk of (m + delta) p_m, in closed form.

    Telescoping gives ``(2 + delta) Gamma(3 + 2 delta) / Gamma(2 + delta)
    * Gamma(kk + 2 + delta) / Gamma(kk + 3 + 2 delta)``; at ``kk = 0`` this is
    the full mean ``2 + delta``.
    """
    delta = check_delta(delta)
    if kk < 0:
        raise ValueError("kk must be >= 0")
    log_t = (
        math.log(2.0 + delta)
        + math.lgamma(3.0 + 2.0 * delta)
        - math.lgamma(2.0 + delta)
        + math.lgamma(kk + 2.0 + delta)
        - math.lgamma(kk + 3.0 + 2.0 * delta)
    )
    return math.exp(log_t)


def sigma1_sq(delta: float) -> float:
    """Limiting variance of sqrt(n) (N_n(1)/n - p_1)."""
    delta = check_delta(delta)
    return (1.0 + delta) * (2.0 + delta) ** 2 / ((3.0 + 2.0 * delta) ** 2 * (4.0 + 3.0 * delta))


# --------------------------------------------------------------------------
# coefficient systems


@lru_cache(maxsize=65536)
def _signed_log_b(j: int, k: int, delta: float) -> tuple[int, float]:
    """(sign, log|b_j^(k)|); sign 0 encodes the zero convention for j > k."""
    if j > k:
        return 0, -math.inf
    if j == k:
        return 1, 0.0
    sign = -1 if (k - j) % 2 else 1
    return sign, math.lgamma(k + delta) - math.lgamma(k - j + 1.0) - math.lgamma(j + delta)


def b_coef(j: int, k: int, delta: float) -> float:
    """Mixing coefficient b_j^(k); zero for j > k, one on the diagonal."""
    if j < 1:
        raise ValueError(f"index j must be >= 1, got {j}")
    delta = check_delta(delta)
    sign, log_abs = _signed_log_b(j, k, delta)
    return sign * math.exp(log_abs) if sign else 0.0


def a_coef(n: int, k: int, delta: float) -> float:
    """Normaliser a_n^(k) via its closed gamma form (``a_k^(k) = 1``)."""
    delta = check_delta(delta)
    if k < 1 or n < k:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    if n == k:
        return 1.0
    g = (1.0 + delta) / (2.0 + delta)
    beta = (1.0 - k) / (2.0 + delta)
    log_a = _lgamma_ratio(float(n), g, beta) - _lgamma_ratio(float(k), g, beta)
    return math.exp(log_a)


@dataclass(frozen=True)
class NormalizerSequence:
    """Weights w_n = n / (n + gamma) and the normalisers a_n^(k)."""

    delta: float

    def __post_init__(self) -> None:
        check_delta(self.delta)

    @property
    def gamma(self) -> float:
        return attachment_exponent(self.delta)

    def w(self, n: int) -> float:
        return n / (n + self.gamma)

    def a(self, n: int, k: int) -> float:
        return a_coef(n, k, self.delta)

    def a_step(self, n: int, k: int) -> float:
        """Ratio a_{n+1}^(k) / a_n^(k) from the one-step recursion."""
        d = self.delta
        return 1.0 / (1.0 - (k + d) / (n * (2.0 + d) + 1.0 + d))


@dataclass(frozen=True)
class CoefficientTable:
    """Lower-triangular table; ``b[k - 1, j - 1] = b_j^(k)``."""

    delta: float
    k_max: int
    b: np.ndarray = field(repr=False)

    def __call__(self, j: int, k: int) -> float:
        if j > k:
            return 0.0
        return float(self.b[k - 1, j - 1])


def coefficient_table(k_max: int, delta: float) -> CoefficientTable:
    delta = check_delta(delta)
    b = np.zeros((k_max, k_max))
    for k in range(1, k_max + 1):
        for j in range(1, k + 1):
            b[k - 1, j - 1] = b_coef(j, k, delta)
    return CoefficientTable(delta, k_max, b)


# --------------------------------------------------------------------------
# expected degree counts


@dataclass(frozen=True)
class MeanTable:
    """Exact expectations nu_n(k) = E N_n(k); ``values[n - 1, k - 1]``."""

    delta: float
    values: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return self.values.shape[0]

    @property
    def k_max(self) -> int:
        return self.values.shape[1]

    def nu(self, n: int, k: int) -> float:
        if not (1 <= n <= self.n_max):
            raise IndexError(f"stage {n} outside 1..{self.n_max}")
        if k > self.k_max:
            raise IndexError(f"degree {k} outside 1..{self.k_max}")
        return float(self.values[n - 1, k - 1])

    def at(self, n: int) -> np.ndarray:
        return self.values[n - 1]


def mean_recursion(n_max: int, k_max: int, delta: float) -> MeanTable:
    """Forward recursion for nu_n(k), n = 1..n_max, k = 1..k_max.

    Row ``k`` only feeds row ``k + 1``, so truncating at ``k_max`` is exact
    for the rows that are kept.
    """
    delta = check_delta(delta)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    out = np.zeros((n_max, k_max))
    nu = np.zeros(k_max)
    nu[1] = 1.0
    out[0] = nu
    out_rate = np.arange(1, k_max + 1, dtype=float) + delta
    in_rate = out_rate[:-1]
    self_rate = 1.0 + delta
    for n in range(1, n_max):
        denom = n * (2.0 + delta) + 1.0 + delta
        nxt = (1.0 - out_rate / denom) * nu
        nxt[1:] += (in_rate / denom) * nu[:-1]
        # a new degree-1 node unless the newcomer self-loops; self-loops make degree 2
        nxt[0] += 1.0 - self_rate / denom
        nxt[1] += self_rate / denom
        nu = nxt
        out[n] = nu
    return MeanTable(delta, out)


# --------------------------------------------------------------------------
# covariance structure


def _bracket(i: int, m: int, delta: float) -> float:
    """b_1^(i) - b_m^(i) + b_{m+1}^(i), with b = 0 above the diagonal."""
    return b_coef(1, i, delta) - b_coef(m, i, delta) + b_coef(m + 1, i, delta)


def _centered_drift(i: int, delta: float) -> float:
    """b_1^(i) - (i + delta)/(2 + delta) * sum_d b_d^(i) p_d, summed directly."""
    s = math.fsum(b_coef(d, i, delta) * pk(d, delta) for d in range(1, i + 1))
    return b_coef(1, i, delta) - (i + delta) / (2.0 + delta) * s


@lru_cache(maxsize=4096)
def _a_cov(i: int, j: int, delta: float) -> float:
    top = max(i, j)
    terms = [
        (m + delta) / (2.0 + delta) * _bracket(i, m, delta) * _bracket(j, m, delta) * pk(m, delta)
        for m in range(1, top + 1)
    ]
    # beyond max(i, j) both brackets collapse to b_1
    terms.append(b_coef(1, i, delta) * b_coef(1, j, delta) * tail_mass(top, delta) / (2.0 + delta))
    return math.fsum(terms) - _centered_drift(i, delta) * _centered_drift(j, delta)


def a_cov(i: int, j: int, delta: float) -> float:
    """Limit a(i, j) of the normalised conditional covariance of martingale increments."""
    if i < 1 or j < 1:
        raise ValueError("indices must be >= 1")
    delta = check_delta(delta)
    if i > j:
        i, j = j, i
    return _a_cov(i, j, delta)


def r_y(i: int, j: int, delta: float) -> float:
    """Covariance of the limiting Gaussian process Y."""
    delta = check_delta(delta)
    return (2.0 + delta) / (i + j + 2.0 + 3.0 * delta) * a_cov(i, j, delta)


def coeff_matrices(k_max: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Lower-triangular ``C`` (entries b_j^(i)) and its inverse ``D``.

    ``D`` is built from the closed form d_ij = (-1)^(i-j) b_j^(i), not by
    inverting ``C``.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    c = coefficient_table(k_max, delta).b
    i, j = np.indices((k_max, k_max))
    d = np.where((i - j) % 2 == 0, c, -c)
    return c, d


def r_y_matrix(k_max: int, delta: float) -> np.ndarray:
    out = np.empty((k_max, k_max))
    for i in range(1, k_max + 1):
        for j in range(i, k_max + 1):
            out[i - 1, j - 1] = out[j - 1, i - 1] = r_y(i, j, delta)
    return out


def sigma_matrix(k_max: int, delta: float) -> np.ndarray:
    """Covariance matrix of the limit of sqrt(n) (N_n(k)/n - p_k), k <= k_max."""
    _, d = coeff_matrices(k_max, delta)
    s = d @ r_y_matrix(k_max, delta) @ d.T
    return 0.5 * (s + s.T)


def simplify_closed_form(i: int, delta: float) -> float:
    """Closed form of b_1^(i) - (i+delta)/(2+delta) sum_d b_d^(i) p_d.

    Equals (2+delta)/Gamma(1+delta) * (-1)^(i-1) Gamma(i+delta) / ((i-1)! (i+2+2 delta)).
    """
    delta = check_delta(delta)
    if i < 1:
        raise ValueError("i must be >= 1")
    log_abs = (
        math.log(2.0 + delta)
        - math.lgamma(1.0 + delta)
        + math.lgamma(i + delta)
        - math.lgamma(float(i))
        - math.log(i + 2.0 + 2.0 * delta)
    )
    return (-1.0 if (i - 1) % 2 else 1.0) * math.exp(log_abs)


def _signed_exp(sign: int, log_abs: float) -> float:
    return sign * math.exp(log_abs) if sign else 0.0


@lru_cache(maxsize=4096)
def _r_z(i: int, j: int, delta: float) -> float:
    s = i + j
    lg_den = math.lgamma(s + 3.0 + 3.0 * delta)

    def gamma_fact(gamma_arg: float, fact_arg: int) -> float:
        # log of Gamma(gamma_arg) * fact_arg! / Gamma(i + j + 3 + 3 delta)
        return math.lgamma(gamma_arg) + math.lgamma(fact_arg + 1.0) - lg_den

    def pair(p: int, q: int) -> tuple[int, float]:
        # b_p^(i) b_q^(j) as (sign, log|.|)
        s1, l1 = _signed_log_b(p, i, delta)
        s2, l2 = _signed_log_b(q, j, delta)
        return s1 * s2, l1 + l2

    def sym(p: int, q: int, gamma_arg: float, fact_arg: int) -> float:
        # (b_p^(i) b_q^(j) + b_q^(i) b_p^(j)) Gamma(.) fact! / Gamma(den)
        if fact_arg < 0:
            return 0.0
        g = gamma_fact(gamma_arg, fact_arg)
        sa, la = pair(p, q)
        sb, lb = pair(q, p)
        return _signed_exp(sa, la + g) + _signed_exp(sb, lb + g)

    def diag(p: int, gamma_arg: float, fact_arg: int) -> float:
        if fact_arg < 0:
            return 0.0
        sg, lg = pair(p, p)
        return _signed_exp(sg, lg + gamma_fact(gamma_arg, fact_arg))

    terms = []
    # m-independent bracket entry; its weights sum to sum_m (m + delta) p_m = 2 + delta
    terms.append((2.0 + delta) * diag(1, 4.0 + 3.0 * delta, s - 2))
    for m in range(1, max(i, j) + 1):
        weight = (m + delta) * pk(m, delta)
        alt = -1.0 if m % 2 else 1.0
        bracket = (
            alt * sym(1, m, m + 3.0 + 3.0 * delta, s - m - 1)
            + alt * sym(1, m + 1, m + 4.0 + 3.0 * delta, s - m - 2)
            + diag(m, 2.0 * m + 2.0 + 3.0 * delta, s - 2 * m)
            + sym(m, m + 1, 2.0 * m + 3.0 + 3.0 * delta, s - 2 * m - 1)
            + diag(m + 1, 2.0 * m + 4.0 + 3.0 * delta, s - 2 * m - 2)
        )
        terms.append(weight * bracket)
    series = math.fsum(terms)
    if s % 2:
        series = -series

    def coef(top: int, l: int) -> float:
        # (-1)^l Gamma(top+delta) / (Gamma(1+delta) (top-l)! (l-1)! (l+2+2delta))
        log_abs = (
            math.lgamma(top + delta)
            - math.lgamma(1.0 + delta)
            - math.lgamma(top - l + 1.0)
            - math.lgamma(float(l))
            - math.log(l + 2.0 + 2.0 * delta)
        )
        return (-1.0 if l % 2 else 1.0) * math.exp(log_abs)

    ci = [coef(i, l) for l in range(1, i + 1)]
    cj = [coef(j, l) for l in range(1, j + 1)]
    double = math.fsum(
        ci[l1 - 1] * cj[l2 - 1] / (l1 + l2 + 2.0 + 3.0 * delta)
        for l1 in range(1, i + 1)
        for l2 in range(1, j + 1)
    )
    return series - (2.0 + delta) ** 3 * double


def r_z(i: int, j: int, delta: float) -> float:
    """Covariance function of the Gaussian limit Z, evaluated term by term.

    This path never forms ``D R_Y D^T``; it is the independent route that
    :func:`sigma_matrix` is checked against.
    """
    if i < 1 or j < 1:
        raise ValueError("indices must be >= 1")
    delta = check_delta(delta)
    if i > j:
        i, j = j, i
    return _r_z(i, j, delta)


def r_z_matrix(k_max: int, delta: float) -> np.ndarray:
    out = np.empty((k_max, k_max))
    for i in range(1, k_max + 1):
        for j in range(i, k_max + 1):
            out[i - 1, j - 1] = out[j - 1, i - 1] = r_z(i, j, delta)
    return out


# --------------------------------------------------------------------------
# identity residuals


def zero_identity_check(i: int, delta: float) -> float:
    """sum_{d<i} p_d [(i-d) b_d^(i) + (d+delta) b_{d+1}^(i)]; exactly zero in theory."""
    delta = check_delta(delta)
    return math.fsum(zero_identity_terms(i, delta))


def zero_identity_terms(i: int, delta: float) -> list[float]:
    """The individual products summed by :func:`zero_identity_check`."""
    delta = check_delta(delta)
    return [
        pk(d, delta) * term
        for d in range(1, i)
        for term in ((i - d) * b_coef(d, i, delta), (d + delta) * b_coef(d + 1, i, delta))
    ]


def simplify_identity_check(i: int, delta: float) -> float:
    """Relative gap between the summed drift and :func:`simplify_closed_form`."""
    left = _centered_drift(i, delta)
    right = simplify_closed_form(i, delta)
    return abs(left - right) / abs(right)


def ident_b_residual(i: int, j: int, r: float, delta: float) -> float:
    """Relative residual of sum_m r^(m-j) b_m^(i) b_j^(m) = b_j^(i) (1+r)^(i-j).

    Normalised by the sum of absolute terms, since (1 + r) may be near zero.
    """
    if not 1 <= j <= i:
        raise ValueError("need 1 <= j <= i")
    terms = [r ** (m - j) * b_coef(m, i, delta) * b_coef(j, m, delta) for m in range(j, i + 1)]
    right = b_coef(j, i, delta) * (1.0 + r) ** (i - j)
    scale = max(math.fsum(abs(t) for t in terms), abs(right), 1e-300)
    return abs(math.fsum(terms) - right) / scale


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CovarianceTheory:
    delta: float
    k_max: int
    a_kernel: np.ndarray = field(repr=False)
    r_y: np.ndarray = field(repr=False)
    c_mat: np.ndarray = field(repr=False)
    d_mat: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    r_z: np.ndarray = field(repr=False)


def covariance_theory(k_max: int, delta: float) -> CovarianceTheory:
    delta = check_delta(delta)
    a = np.empty((k_max, k_max))
    for i in range(1, k_max + 1):
        for j in range(i, k_max + 1):
            a[i - 1, j - 1] = a[j - 1, i - 1] = a_cov(i, j, delta)
    c, d = coeff_matrices(k_max, delta)
    return CovarianceTheory(
        delta=delta,
        k_max=k_max,
        a_kernel=a,
        r_y=r_y_matrix(k_max, delta),
        c_mat=c,
        d_mat=d,
        sigma=sigma_matrix(k_max, delta),
        r_z=r_z_matrix(k_max, delta),
    )
