from __future__ import annotations

import numpy as np
import pytest

from sbstacy.centering import RegressionTheta, centering_arrays
from sbstacy.data import CensoredSample
from sbstacy.io import discretize, make_grid
from sbstacy.process import SubdistributionFunction, TimeGrid
from sbstacy.simulation import (
    MELANOMA_MLE,
    SimulationConfig,
    fit_mle,
    generate_dataset,
    ks_distance,
    run_simulation_study,
    write_distance_table,
)

from conftest import melanoma_or_skip


def _sub(inc):
    inc = np.asarray(inc, dtype=float)
    return SubdistributionFunction(inc, TimeGrid(inc.shape[0]))


def test_ks_distance_hand_example():
    truth = _sub([[0.1, 0.0], [0.1, 0.1], [0.1, 0.0]])
    est = _sub([[0.2, 0.0], [0.0, 0.1], [0.0, 0.3]])
    # cumulative cause 1: truth 0.1 0.2 0.3, estimate 0.2 0.2 0.2
    assert ks_distance(est, truth, cause=1) == pytest.approx(0.1)
    assert ks_distance(est, truth, up_to_bin=2, cause=2) == pytest.approx(0.0)
    assert ks_distance(est, truth, cause=2) == pytest.approx(0.3)
    assert ks_distance(truth, truth) == 0.0


def test_ks_distance_errors():
    a = _sub([[0.1], [0.1]])
    with pytest.raises(ValueError):
        ks_distance(a, _sub([[0.1], [0.1], [0.1]]))
    with pytest.raises(ValueError):
        ks_distance(a, a, up_to_bin=3)
    with pytest.raises(IndexError):
        ks_distance(a, a, cause=2)


def test_generate_dataset_frequencies(rng):
    grid = TimeGrid.uniform(70, 100.0)
    data = generate_dataset(MELANOMA_MLE, 40000, 50, grid, rng)
    inc, surv = centering_arrays(MELANOMA_MLE, [1.0], grid)
    assert data.times.max() <= 50 and data.k == 2 and data.p == 1
    for c in (1, 2):
        expected = inc[:50, c - 1].sum()
        observed = np.mean(data.causes == c)
        assert observed == pytest.approx(expected, abs=4 * np.sqrt(expected * (1 - expected) / data.n))
    censored = np.mean(data.causes == 0)
    assert censored == pytest.approx(surv[50], abs=4 * np.sqrt(surv[50] * (1 - surv[50]) / data.n))
    assert np.all(data.times[data.causes == 0] == 50)


def test_generate_dataset_validation(rng):
    grid = TimeGrid(10)
    with pytest.raises(ValueError):
        generate_dataset(MELANOMA_MLE, 10, 11, grid, rng)
    with pytest.raises(ValueError):
        generate_dataset(MELANOMA_MLE, 0, 5, grid, rng)
    two = RegressionTheta([[0.0, 0.0]], np.zeros((2, 2)), [1.0, 1.0])
    with pytest.raises(ValueError):
        generate_dataset(two, 10, 5, grid, rng)


def test_generate_dataset_reproducible():
    grid = TimeGrid(30)
    a = generate_dataset(MELANOMA_MLE, 50, 30, grid, 9)
    b = generate_dataset(MELANOMA_MLE, 50, 30, grid, 9)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.causes, b.causes)


def test_fit_mle_recovers_generating_theta():
    theta = RegressionTheta([[0.5]], [[-3.0], [-3.5]], [1.4, 0.8])
    grid = TimeGrid(60)
    data = generate_dataset(theta, 20000, 60, grid, 2)
    fit = fit_mle(data)
    assert fit.converged
    assert np.allclose(fit.theta.to_vector(log_shape=False), theta.to_vector(log_shape=False), atol=0.08)


def test_fit_mle_melanoma_target():
    time, status, _ = melanoma_or_skip()
    grid = make_grid(time, 1.0)
    bins, causes = discretize(time, status, grid)
    fit = fit_mle(CensoredSample(bins, causes, grid, 2), start=MELANOMA_MLE)
    target = [-0.640, -11.927, -7.244, 1.597, 0.639]
    assert np.allclose(fit.theta.to_vector(log_shape=False), target, atol=1e-2)


def test_small_study_runs_and_is_reproducible():
    cfg = SimulationConfig(
        n_replicates=2, sample_sizes=(40,), horizon=20, bin_width=300.0, censor_bin=20,
        m_values=(1.0, 1e6), n_iter=60, burn_in=20, thin=2, seed=3,
    )
    res = run_simulation_study(cfg)
    assert res.failures == []
    assert len(res.rows) == 2 * 3 * 2
    assert res.distances("sbs", 40, 2, 1e6).shape == (2,)
    assert all(0 <= r[5] <= 1 for r in res.rows)
    text = write_distance_table(res)
    assert text.splitlines()[0] == "model,m,n,replicate,cause,ks_distance"
    assert text == write_distance_table(run_simulation_study(cfg))


def test_simulation_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(horizon=10, censor_bin=11)
    cfg = SimulationConfig(theta={"b": [[0.0]], "v": [[-1.0], [-1.0]], "u": [1.0, 1.0]})
    assert isinstance(cfg.theta, RegressionTheta)
    assert cfg.regression_config(None).likelihood == "parametric"
    assert cfg.regression_config(1e3).fixed_shape == 1.0
    assert cfg.to_dict()["m_values"] == [1.0, 1e3, 1e6]
