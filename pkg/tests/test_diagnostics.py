from __future__ import annotations

import numpy as np
import pytest

from sbstacy.diagnostics import (
    effective_sample_size,
    geweke_diagnostic,
    monte_carlo_se,
    spectral_density_zero,
)


def _ar1(rng, n, phi, sigma=1.0):
    x = np.empty(n)
    x[0] = rng.normal(0, sigma / np.sqrt(1 - phi**2))
    eps = rng.normal(0, sigma, n)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + eps[i]
    return x


def test_spectral_density_white_noise(rng):
    x = rng.normal(0, 2.0, 20000)
    assert spectral_density_zero(x) == pytest.approx(4.0, rel=0.05)


def test_spectral_density_ar1(rng):
    phi = 0.7
    x = _ar1(rng, 40000, phi)
    # long-run variance of AR(1): sigma^2 / (1 - phi)^2
    assert spectral_density_zero(x) == pytest.approx(1 / (1 - phi) ** 2, rel=0.1)
    assert effective_sample_size(x) == pytest.approx(x.size * (1 - phi) / (1 + phi), rel=0.15)


def test_monte_carlo_se_calibrated(rng):
    means, ses = [], []
    for _ in range(200):
        x = _ar1(rng, 500, 0.5)
        means.append(x.mean())
        ses.append(monte_carlo_se(x))
    assert np.std(means) == pytest.approx(np.mean(ses), rel=0.15)


def test_geweke_iid_rate(rng):
    z = np.concatenate([geweke_diagnostic(rng.normal(size=(2000, 5))) for _ in range(100)])
    assert z.shape == (500,)
    assert np.mean(np.abs(z) < 1.96) == pytest.approx(0.95, abs=0.04)
    assert np.mean(np.abs(z) < 3) > 0.98


def test_geweke_detects_shift(rng):
    x = rng.normal(size=1000)
    x[:100] += 2.0
    assert abs(geweke_diagnostic(x)[0]) > 5


def test_geweke_constant_and_short():
    z = geweke_diagnostic(np.column_stack([np.ones(50), np.arange(50.0) % 3]))
    assert np.isnan(z[0]) and np.isfinite(z[1])
    with pytest.raises(ValueError):
        geweke_diagnostic(np.zeros(19))
    with pytest.raises(ValueError):
        geweke_diagnostic(np.zeros(100), 0.6, 0.5)
    assert np.isnan(effective_sample_size(np.ones(30)))
    with pytest.raises(ValueError):
        spectral_density_zero([1.0])
