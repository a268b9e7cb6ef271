"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line (printed, and repeated in the
terminal summary) before asserting.
"""

import io
import math
import time
import tracemalloc
from collections import Counter

import numpy as np
import pytest

from prefattach import theory as t
from prefattach.experiment import ExperimentConfig, empirical_moments, run_experiment
from prefattach.martingale import mg_one_step_residual
from prefattach.model import degree_census, grow_to, init_graph, replica_censuses, stream_rng
from prefattach.oracle import enumerate_stages

DELTAS = (-0.5, 0.0, 1.0)
COV_DELTAS = (-0.5, 0.0, 1.0, 5.0)


def test_c01_oracle_matches_mean_recursion(criterion):
    start = time.perf_counter()
    worst = 0.0
    for delta in DELTAS:
        stages = enumerate_stages(6, delta)
        nu = t.mean_recursion(6, 7, delta)
        for d in stages:
            for k in range(1, 8):
                worst = max(worst, abs(d.mean(k) - nu.nu(d.stage, k)))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 5.0
    criterion("C1 oracle/recursion", ok, f"max |exact - recursion| = {worst:.2e} (< 1e-12), {elapsed:.2f} s (< 5 s)")
    assert ok


def test_c02_simulator_matches_oracle(criterion):
    start = time.perf_counter()
    r = 200_000
    counts = replica_censuses(0.0, 6, 7, seed=20240601, stream_ids=range(r))
    observed = Counter(map(tuple, counts.tolist()))
    exact = enumerate_stages(6, 0.0)[5].support
    elapsed = time.perf_counter() - start
    assert set(observed) <= set(exact)
    worst = max(abs(observed.get(c, 0) / r - p) / math.sqrt(p * (1 - p) / r) for c, p in exact.items())
    ok = worst < 5.0 and elapsed < 30.0
    criterion(
        "C2 simulator vs oracle",
        ok,
        f"{len(exact)} outcomes, max deviation {worst:.2f} SE (< 5), {elapsed:.1f} s (< 30 s)",
    )
    assert ok


def test_c03_martingale_property(criterion):
    worst = 0.0
    checked = 0
    for delta in DELTAS:
        for d in enumerate_stages(5, delta):
            for ws in d.states():
                for k in range(1, 5):
                    if d.stage >= k:
                        worst = max(worst, mg_one_step_residual(ws.state, k, delta))
                        checked += 1
    ok = worst < 1e-12
    criterion("C3 martingale property", ok, f"max residual {worst:.2e} over {checked} (state, k, delta) (< 1e-12)")
    assert ok


def _p_tail(kk, delta):
    # sum_{k>kk} p_k by telescoping Gamma(k+delta)/Gamma(k+3+2delta)
    return math.exp(
        math.log(t.c_norm(delta))
        + math.lgamma(kk + 1 + delta)
        - math.lgamma(kk + 3 + 2 * delta)
        - math.log(2 + delta)
    )


def test_c04_identity_suite(criterion):
    rng = np.random.default_rng(4)
    res = {"b binomial": 0.0, "zero sum": 0.0, "drift closed form": 0.0, "CD=I": 0.0}
    sums = 0.0
    for delta in COV_DELTAS:
        for i in range(1, 13):
            for j in range(1, i + 1):
                for r in rng.uniform(-3, 3, 4):
                    res["b binomial"] = max(res["b binomial"], t.ident_b_residual(i, j, float(r), delta))
            res["drift closed form"] = max(res["drift closed form"], t.simplify_identity_check(i, delta))
        for i in range(1, 16):
            # the target is 0, so the residual is relative to the sum of |terms|
            scale = math.fsum(abs(x) for x in t.zero_identity_terms(i, delta)) or 1.0
            res["zero sum"] = max(res["zero sum"], abs(t.zero_identity_check(i, delta)) / scale)
        for k in range(1, 13):
            c, d = t.coeff_matrices(k, delta)
            # relative to sum |c_im d_mj|; entries above the diagonal are exact zeros
            scale = np.abs(c) @ np.abs(d)
            gap = np.abs(c @ d - np.eye(k))
            assert np.all(gap[scale == 0] == 0)
            res["CD=I"] = max(res["CD=I"], float((gap[scale > 0] / scale[scale > 0]).max()))
        for kk in (10, 1000, 10**5):
            p = t.pk_array(kk, delta)
            ks = np.arange(1, kk + 1)
            first = math.fsum((ks + delta) * p) + t.tail_mass(kk, delta)
            mean = first - delta * (math.fsum(p) + _p_tail(kk, delta))
            sums = max(sums, abs(mean - 2.0) / 2.0, abs(first - (2.0 + delta)) / (2.0 + delta))
    ok = max(res.values()) < 1e-10 and sums < 1e-8
    detail = ", ".join(f"{k} {v:.1e}" for k, v in res.items()) + f" (< 1e-10); moment sums {sums:.1e} (< 1e-8)"
    criterion("C4 identities", ok, detail)
    assert ok


@pytest.mark.parametrize("delta", COV_DELTAS)
def test_c05_covariance_two_paths(delta, criterion):
    s = t.sigma_matrix(8, delta)
    z = t.r_z_matrix(8, delta)
    gap = np.abs(s - z)
    size = np.sqrt(np.outer(np.diag(z), np.diag(z)))
    # relative error is undefined where the exact entry is zero ((1, 6) at delta = 0);
    # there the gap is measured against sqrt(R_Z(i,i) R_Z(j,j)) instead
    zero = np.abs(z) <= 1e-12 * size
    rel = float((gap[~zero] / np.abs(z[~zero])).max())
    rel_zero = float((gap[zero] / size[zero]).max()) if zero.any() else 0.0
    scaled = float((gap / size).max())
    var1 = abs(t.r_z(1, 1, delta) - t.sigma1_sq(delta)) / t.sigma1_sq(delta)
    eig = min(float(np.linalg.eigvalsh(t.sigma_matrix(k, delta)).min()) for k in range(1, 11))
    diag_a = min(t.a_cov(i, i, delta) for i in range(1, 11))
    diag_z = min(t.r_z(i, i, delta) for i in range(1, 11))
    ok = rel < 1e-8 and rel_zero < 1e-8 and var1 < 1e-10 and eig >= -1e-10 and diag_a > 0 and diag_z > 0
    criterion(
        f"C5 covariance paths delta={delta:g}",
        ok,
        f"max rel |Sigma-R_Z| {rel:.1e} (< 1e-8), zero entries {int(zero.sum())} gap {rel_zero:.1e}, "
        f"gap/sqrt(R_Z(i,i)R_Z(j,j)) {scaled:.1e}, "
        f"|r_z(1,1)-sigma1^2| rel {var1:.1e}, min eig {eig:.1e}, min a(i,i) {diag_a:.2e}, min R_Z(i,i) {diag_z:.2e}",
    )
    assert ok


@pytest.fixture(scope="module")
def clt_run():
    start = time.perf_counter()
    report = run_experiment(ExperimentConfig(0.0, 10**5, 2000, k_max=3, master_seed=0))
    return report, time.perf_counter() - start


def test_c06_clt_variance(clt_run, criterion):
    report, elapsed = clt_run
    var = empirical_moments(report.sample.values[:, 0]).cov[0, 0]
    rel = var / (1 / 9) - 1
    ok = abs(rel) < 0.10 and elapsed < 120
    criterion("C6 CLT variance k=1", ok, f"var {var:.5f} vs 1/9 ({rel:+.1%}, |.| < 10%), run {elapsed:.1f} s (< 120 s)")
    assert ok


def test_c07_clt_shape(clt_run, criterion):
    report, _ = clt_run
    v = report.verdicts
    names = [n for n in v if n.split("_k")[0] in ("ks", "skew", "ex_kurt")] + ["covariance_se"]
    names += [n for n in v if n.startswith("cramer_wold")]
    ok = all(v[n] for n in names) and len(report.projections) == 3
    ks = ", ".join(f"{e['p_value']:.2f}" for e in report.ks)
    cw = ", ".join(f"{e['p_value']:.2f}" for e in report.projections)
    dev = float(np.abs(report.cov_deviation_se).max())
    criterion(
        "C7 CLT shape k<=3",
        ok,
        f"KS p [{ks}], skew max {np.abs(report.moments.skew).max():.3f}, ex_kurt max "
        f"{np.abs(report.moments.ex_kurt).max():.3f}, cov max {dev:.2f} SE, Cramer-Wold p [{cw}]",
    )
    assert ok


def test_c08_frequency_lln(criterion):
    s = grow_to(init_graph(0.0), 10**6, stream_rng(8))
    c = degree_census(s, 5)
    worst = max(abs(c[k] / s.n - t.pk(k, 0.0)) for k in range(1, 6))
    ok = worst < 0.01
    criterion("C8 degree-frequency LLN", ok, f"max |N_n(k)/n - p_k| = {worst:.2e} (< 0.01), n = 10^6")
    assert ok


def test_c09_performance_reported(criterion):
    n = 10**7
    grow_to(init_graph(0.0), 1000, stream_rng(0))  # compile outside the timing
    tracemalloc.start()
    start = time.perf_counter()
    s = grow_to(init_graph(0.0), n, stream_rng(9))
    elapsed = time.perf_counter() - start
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert s.n == n
    criterion(
        "C9 performance (soft, not asserted)",
        elapsed < 5.0,
        f"grow_to 10^7 in {elapsed:.2f} s (< 5 s), peak traced memory {peak / n:.1f} bytes/node",
    )


def test_c10_reproducible_across_workers(criterion):
    files = []
    for workers in (1, 2, 3):
        rep = run_experiment(ExperimentConfig(0.25, 5000, 240, k_max=3, master_seed=99, workers=workers))
        buf = io.StringIO()
        rep.sample.write_csv(buf)
        files.append((buf.getvalue().encode(), rep.to_json().encode()))
    ok = all(f == files[0] for f in files)
    criterion("C10 reproducibility", ok, "sample CSV and report JSON byte-identical for workers 1, 2, 3")
    assert ok
