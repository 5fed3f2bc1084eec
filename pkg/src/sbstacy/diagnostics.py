"""Convergence diagnostics for MCMC output."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_toeplitz

__all__ = ["spectral_density_zero", "monte_carlo_se", "effective_sample_size", "geweke_diagnostic"]


def _autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = len(x)
    xc = x - x.mean()
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1] / n
    return acov


def spectral_density_zero(x, max_order: int | None = None) -> float:
    """Spectral density at frequency zero of a univariate series.

    Fits autoregressions of increasing order by Yule-Walker, keeps the one
    with the smallest AIC and returns ``sigma^2 / (1 - sum phi)^2``. This is
    the quantity ``n * Var(mean)`` estimates for a stationary series.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two values")
    if max_order is None:
        max_order = int(min(n - 1, np.floor(10 * np.log10(n))))
    acov = _autocovariance(x, max_order)
    if acov[0] <= 0:
        return 0.0
    best_aic, best = n * np.log(acov[0]), (acov[0], np.zeros(0))
    for p in range(1, max_order + 1):
        try:
            phi = solve_toeplitz(acov[:p], acov[1 : p + 1])
        except np.linalg.LinAlgError:
            break
        sigma2 = acov[0] - phi @ acov[1 : p + 1]
        if sigma2 <= 0:
            break
        aic = n * np.log(sigma2) + 2 * p
        if aic < best_aic:
            best_aic, best = aic, (sigma2, phi)
    sigma2, phi = best
    return float(sigma2 / (1.0 - phi.sum()) ** 2)


def monte_carlo_se(x) -> float:
    """Standard error of the sample mean of a (possibly autocorrelated) chain."""
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(spectral_density_zero(x) / x.size))


def effective_sample_size(x) -> float:
    x = np.asarray(x, dtype=float)
    s0 = spectral_density_zero(x)
    var = x.var()
    if s0 <= 0 or var <= 0:
        return float("nan")
    return float(x.size * var / s0)


def geweke_diagnostic(chain, frac_a: float = 0.1, frac_b: float = 0.5) -> np.ndarray:
    """Geweke z-scores comparing the start and end of each chain coordinate.

    Parameters
    ----------
    chain : array-like of shape (n,) or (n, d)
    frac_a, frac_b : float
        Fractions of the chain forming the early and late windows.

    Returns
    -------
    z : ndarray of shape (d,)
        ``(mean_a - mean_b) / sqrt(S_a(0) / n_a + S_b(0) / n_b)``; NaN for a
        coordinate whose windows are both constant.
    """
    x = np.asarray(chain, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 20:
        raise ValueError(f"chain too short for the Geweke diagnostic ({n} < 20)")
    if not (0 < frac_a < 1 and 0 < frac_b < 1 and frac_a + frac_b <= 1):
        raise ValueError("need 0 < frac_a, frac_b and frac_a + frac_b <= 1")
    na = int(np.floor(frac_a * n))
    nb = int(np.floor(frac_b * n))
    a, b = x[:na], x[n - nb:]
    z = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        var = spectral_density_zero(a[:, j]) / na + spectral_density_zero(b[:, j]) / nb
        diff = a[:, j].mean() - b[:, j].mean()
        z[j] = diff / np.sqrt(var) if var > 0 else np.nan
    return z
