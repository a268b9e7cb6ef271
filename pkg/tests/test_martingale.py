import numpy as np
import pytest

from prefattach.martingale import (
    conditional_covariance_sum,
    k1_martingale,
    martingale_path,
    martingale_value,
    mg_one_step_residual,
    scaled_increment_array,
)
from prefattach.model import ModelParams, census_trajectory
from prefattach.oracle import enumerate_stages
from prefattach.theory import a_coef, mean_recursion, r_y


def test_stage_two_values():
    nu = mean_recursion(2, 2, 0.0).at(2)
    assert martingale_value([1, 0], 2, 1, 0.0, nu) == pytest.approx(0.5)
    assert martingale_value([0, 2], 2, 1, 0.0, nu) == pytest.approx(-1.0)
    # mean zero under the stage-2 law (2/3, 1/3)
    assert 2 / 3 * 0.5 + 1 / 3 * -1.0 == pytest.approx(0.0)


@pytest.mark.parametrize("delta", [-0.5, 0.0, 1.0])
def test_mean_zero_under_exact_law(delta):
    for d in enumerate_stages(7, delta)[3:]:
        nu = mean_recursion(d.stage, d.stage + 1, delta).at(d.stage)
        for k in range(1, 4):
            total = sum(p * martingale_value(c, d.stage, k, delta, nu) for c, p in d.support.items())
            assert abs(total) < 1e-12 * a_coef(d.stage, k, delta)


def test_path_values_agree_with_direct_formula():
    delta = 0.3
    traj = census_trajectory(ModelParams(delta, seed=2), 2000, 5)
    nu = mean_recursion(2000, 5, delta)
    for k in (1, 3, 5):
        path = martingale_path(traj, k, delta)
        for n in (k, 50, 1999, 2000):
            direct = martingale_value(traj[n - 1], n, k, delta, nu.at(n))
            assert path.value(n) == pytest.approx(direct, rel=1e-9, abs=1e-9 * a_coef(n, k, delta))


def test_k1_route_agrees():
    delta = -0.4
    traj = census_trajectory(ModelParams(delta, seed=5), 5000, 2)
    path = martingale_path(traj, 1, delta)
    alt = k1_martingale(traj, delta)
    assert np.allclose(path.values, alt, rtol=1e-10, atol=1e-10)


def test_path_needs_stage_k():
    traj = census_trajectory(ModelParams(0.0), 3, 4)
    with pytest.raises(ValueError):
        martingale_path(traj, 4, 0.0)


def test_scaled_increments_sum_to_scaled_martingale():
    delta, n = 0.0, 3000
    traj = census_trajectory(ModelParams(delta, seed=8), n, 4)
    paths = [martingale_path(traj, j, delta) for j in range(1, 4)]
    x = scaled_increment_array(paths, n)
    for j, p in enumerate(paths, start=1):
        want = (p.value(n) - p.value(3)) / (a_coef(n, j, delta) * np.sqrt(n))
        assert x[:, j - 1].sum() == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_conditional_covariance_near_limit():
    delta, n = 0.0, 20000
    traj = census_trajectory(ModelParams(delta, seed=1), n, 3)
    v = conditional_covariance_sum(traj, 2, delta)
    # soft: a.s. convergence without a known rate
    assert v[0, 0] == pytest.approx(r_y(1, 1, delta), rel=0.1)


@pytest.mark.parametrize("delta", [-0.5, 0.0, 1.0])
def test_one_step_residual_small(delta):
    worst = max(
        mg_one_step_residual(ws.state, k, delta)
        for d in enumerate_stages(5, delta)
        for ws in d.states()
        for k in range(1, 5)
        if d.stage >= k
    )
    assert worst < 1e-12
