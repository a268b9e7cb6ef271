from functools import lru_cache

import numpy as np
import pytest

from prefattach.martingale import mg_one_step_residual
from prefattach.model import attachment_distribution
from prefattach.oracle import OracleBudgetError, enumerate_stages, exact_cond_step, exact_cov, exact_mean
from prefattach.theory import mean_recursion


@lru_cache(None)
def partitions(n, largest=None):
    largest = n if largest is None else largest
    if n == 0:
        return 1
    return sum(partitions(n - k, k) for k in range(1, min(n, largest) + 1))


def test_stage_two_law():
    d = enumerate_stages(2, 0.0)[1]
    assert d.support.keys() == {(1, 0, 1), (0, 2, 0)}
    assert d.support[(1, 0, 1)] == pytest.approx(2 / 3)
    assert d.support[(0, 2, 0)] == pytest.approx(1 / 3)
    assert exact_cov(2, 1, 1, 0.0) == pytest.approx(2 / 9)


@pytest.mark.parametrize("delta", [-0.5, 0.0, 1.0])
def test_support_is_every_census(delta):
    # excess degrees D - 1 form a partition of n into at most n parts, and all are reachable
    for d in enumerate_stages(9, delta):
        assert len(d.support) == partitions(d.stage)
        assert d.total() == pytest.approx(1.0, abs=1e-14)
        assert min(d.support.values()) > 0


def test_budget():
    with pytest.raises(OracleBudgetError):
        enumerate_stages(12, 0.0)
    assert len(enumerate_stages(10, 0.0, budget=10)) == 10


def test_second_moments_match_brute_force_paths():
    # labelled path enumeration at n = 4 as an independent check
    from itertools import product

    delta = 0.4
    moments = np.zeros(5)
    second = 0.0
    for choices in product(range(4), repeat=3):
        deg = [2]
        prob = 1.0
        ok = True
        for n, c in enumerate(choices, start=1):
            denom = n * (2 + delta) + 1 + delta
            if c == n:
                prob *= (1 + delta) / denom
                deg.append(2)
            elif c < n:
                prob *= (deg[c] + delta) / denom
                deg[c] += 1
                deg.append(1)
            else:
                ok = False
                break
        if ok:
            cnt = np.bincount(deg, minlength=6)[1:6]
            moments += prob * cnt
            second += prob * cnt[0] ** 2
    for k in range(1, 6):
        assert exact_mean(4, k, delta) == pytest.approx(moments[k - 1], abs=1e-14)
    assert exact_cov(4, 1, 1, delta) == pytest.approx(second - moments[0] ** 2, abs=1e-14)


@pytest.mark.parametrize("delta", [-0.5, 0.0, 1.0])
def test_cond_step_reproduces_mean_recursion(delta):
    nu = mean_recursion(7, 8, delta)
    for d in enumerate_stages(6, delta):
        for ws in d.states():
            p_nodes, p_self = attachment_distribution(ws.state)
            assert p_nodes.sum() + p_self == pytest.approx(1.0, abs=1e-15)
        for k in range(1, 8):
            agg = sum(
                ws.probability * exact_cond_step(ws.state, delta, lambda g, k=k: float((g.degrees == k).sum()))
                for ws in d.states()
            )
            assert agg == pytest.approx(nu.nu(d.stage + 1, k), abs=1e-12)


def test_residual_helper_runs_on_oracle_states():
    for ws in enumerate_stages(4, 0.0)[3].states():
        assert mg_one_step_residual(ws.state, 2, 0.0) < 1e-12
