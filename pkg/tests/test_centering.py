from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sbstacy.centering import (
    RegressionTheta,
    _weights,
    centered_alpha,
    centered_prior,
    centering_arrays,
    centering_subdistribution,
    discrete_weibull_cdf,
    get_family,
    multinomial_logistic,
    weight_schedule,
)
from sbstacy.process import TimeGrid, centered_to_raw, prior_mean
from sbstacy.regression import DEFAULT_V_INTERCEPT
from sbstacy.simulation import MELANOMA_MLE


def _theta(b, v, u):
    return RegressionTheta(np.atleast_2d(b), np.atleast_2d(v), u)


def test_logistic_even_split():
    theta = _theta([[0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0])
    assert np.allclose(multinomial_logistic(theta, [1.0, 0.3]), [0.5, 0.5])


def test_logistic_at_fitted_intercept():
    theta = _theta([[-0.640, 2.0]], np.zeros((2, 2)), [1.0, 1.0])
    p = multinomial_logistic(theta, [1.0, 0.0])
    expected = np.exp(-0.64) / (1 + np.exp(-0.64))
    assert p[0] == pytest.approx(expected)
    assert p[0] == pytest.approx(0.3452, abs=5e-5)
    assert p[1] == pytest.approx(0.6548, abs=5e-5)


@settings(max_examples=60, deadline=None)
@given(
    b=arrays(float, (2, 3), elements=st.floats(-30, 30)),
    w=arrays(float, 3, elements=st.floats(-5, 5)),
)
def test_logistic_normalised(b, w):
    theta = RegressionTheta(b, np.zeros((3, 3)), np.ones(3))
    w[0] = 1.0
    p = multinomial_logistic(theta, w)
    assert np.all(p >= 0) and p.sum() == pytest.approx(1.0)
    eta = np.append(b @ w, 0.0)
    naive = np.exp(eta - eta.max()) / np.exp(eta - eta.max()).sum()
    assert np.allclose(p, naive, atol=1e-12)


def test_logistic_dimension_mismatch():
    theta = _theta([[0.0, 0.0]], np.zeros((2, 2)), [1.0, 1.0])
    with pytest.raises(ValueError):
        multinomial_logistic(theta, [1.0, 0.0, 2.0])


def test_weibull_exponential_case():
    theta = _theta([[0.0]], [[np.log(1 / 5.0)], [0.0]], [1.0, 1.0])
    grid = TimeGrid.uniform(3, 5.0)
    assert discrete_weibull_cdf(theta, 1, [1.0], 1, grid) == pytest.approx(1 - np.exp(-1))


def test_weibull_prior_median():
    theta = _theta([[0.0]], [[DEFAULT_V_INTERCEPT], [0.0]], [1.0, 1.0])
    assert discrete_weibull_cdf(theta, 1, [1.0], 3650) == pytest.approx(0.5)


def test_weibull_monotone(rng):
    for _ in range(10):
        theta = _theta([[0.0, 0.0]], rng.normal(-3, 1, (2, 2)), rng.gamma(11, 0.1, 2))
        vals = [discrete_weibull_cdf(theta, 2, [1.0, 0.5], t) for t in range(0, 60)]
        assert np.all(np.diff(vals) >= 0)
    with pytest.raises(IndexError):
        discrete_weibull_cdf(theta, 3, [1.0, 0.5], 1)


def test_centering_structure():
    theta = MELANOMA_MLE
    grid = TimeGrid.uniform(70, 100.0)
    F0 = centering_subdistribution(theta, [1.0], grid)
    pi = multinomial_logistic(theta, [1.0])
    assert F0.increments.sum() <= 1.0
    inc, surv = centering_arrays(theta, [1.0], grid)
    assert surv[-1] == pytest.approx(1 - inc.sum(), abs=1e-12)
    for c in range(2):
        G = np.array([discrete_weibull_cdf(theta, c + 1, [1.0], t, grid) for t in range(71)])
        assert np.allclose(inc[:, c], pi[c] * np.diff(G), rtol=1e-10, atol=1e-300)


def test_centering_symmetry():
    theta = _theta([[0.0]], [[-4.0], [-4.0]], [1.3, 1.3])
    inc, _ = centering_arrays(theta, [1.0], TimeGrid(40))
    assert np.allclose(inc[:, 0], inc[:, 1])


def test_centering_mass_tends_to_logistic():
    theta = MELANOMA_MLE
    grid = TimeGrid.uniform(200, 1e5)
    inc, _ = centering_arrays(theta, [1.0], grid)
    assert np.allclose(inc.sum(axis=0), multinomial_logistic(theta, [1.0]), atol=1e-8)


def test_lognormal_family():
    fam = get_family("lognormal")
    theta = _theta([[0.0]], [[np.log(10.0)], [np.log(20.0)]], [0.5, 0.5])
    inc, _ = centering_arrays(theta, [1.0], TimeGrid(400), fam)
    median_bin = np.searchsorted(np.cumsum(inc[:, 0]) / 0.5, 0.5) + 1
    assert 9 <= median_bin <= 11
    with pytest.raises(ValueError):
        get_family("gompertz")


def test_weights_constant_for_uniform_increments():
    grid = TimeGrid(10)
    inc = np.full((10, 2), 0.04)
    assert np.allclose(_weights(inc, grid, 1e12), 1 / 0.08)


def test_weights_halving_doubles():
    grid = TimeGrid.uniform(4, 3.0)
    inc = np.array([[0.1, 0.1], [0.05, 0.02], [0.2, 0.1], [0.01, 0.01]])
    half = inc.copy()
    half[2] /= 2
    w, w2 = _weights(inc, grid, 1e12), _weights(half, grid, 1e12)
    assert w2[2] == pytest.approx(2 * w[2])
    assert np.allclose(np.delete(w2, 2), np.delete(w, 2))


def test_weights_capped_in_deep_tail():
    theta = _theta([[0.0]], [[-1.0], [-1.0]], [2.0, 2.0])
    w = weight_schedule(theta, [1.0], TimeGrid(40))
    assert w.max() == 1e12
    assert np.all(np.isfinite(w))


def test_weights_grow_over_late_follow_up():
    grid = TimeGrid.uniform(70, 100.0)
    w = weight_schedule(MELANOMA_MLE, [1.0], grid)
    peak = np.argmin(w)
    assert np.all(np.diff(w[peak:]) > 0)
    assert w[-1] > 5 * w[peak]


def test_centered_prior_matches_alpha():
    grid = TimeGrid.uniform(70, 100.0)
    prior = centered_prior(MELANOMA_MLE, [1.0], grid, m=10.0)
    alpha = centered_alpha(MELANOMA_MLE, [1.0], grid, m=10.0)
    assert np.allclose(centered_to_raw(prior).alpha, alpha, rtol=1e-10)
    inc, _ = centering_arrays(MELANOMA_MLE, [1.0], grid)
    from sbstacy.process import SbsParameters

    assert np.allclose(prior_mean(SbsParameters(alpha, grid)), inc, rtol=1e-10)
    with pytest.raises(ValueError):
        centered_alpha(MELANOMA_MLE, [1.0], grid, m=0.0)


def test_theta_vector_round_trip():
    theta = _theta([[0.1, -0.2]], [[1.0, 2.0], [3.0, 4.0]], [0.5, 2.0])
    back = RegressionTheta.from_vector(theta.to_vector(), 2, 2)
    assert np.allclose(back.to_vector(log_shape=False), theta.to_vector(log_shape=False))
    assert RegressionTheta.names(2, 2) == ["b1_0", "b1_1", "v1_0", "v1_1", "v2_0", "v2_1", "u1", "u2"]
    with pytest.raises(ValueError):
        _theta([[0.0]], [[0.0], [0.0]], [1.0, -1.0])
