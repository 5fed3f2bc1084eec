"""Scikit-learn style estimators wrapping the SBS machinery."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_covariates, check_rng, check_survival_y
from .data import CensoredSample
from .io import discretize, make_grid
from .posterior import count_statistics, kalbfleisch_prentice, posterior_update, predictive_distribution
from .process import CenteredSbs, SbsParameters, SubdistributionFunction, centered_to_raw, sample_increments
from .regression import (
    PredictiveCurve,
    RegressionConfig,
    predictive_for_profile,
    rwmh_sample,
)

__all__ = ["SbsEstimator", "SbsRegressor"]


def _lookup(cum: np.ndarray, grid, times) -> np.ndarray:
    """Rows of a cumulative table at raw ``times`` (0 before the first bin)."""
    if times is None:
        return cum
    times = np.asarray(times, dtype=float)
    idx = np.searchsorted(grid.edges, times, side="right") - 1
    idx = np.clip(idx, 0, grid.horizon)
    padded = np.concatenate([np.zeros((1,) + cum.shape[1:]), cum], axis=0)
    return padded[idx]


class SbsEstimator(BaseEstimator):
    """Nonparametric cumulative incidence with an SBS prior.

    Parameters
    ----------
    prior : SbsParameters, CenteredSbs or float, default=1.0
        Prior process. A float ``a`` means ``alpha_{t,c} = a`` everywhere.
    n_causes : int or None
        Number of event types; inferred from ``y`` when None.
    bin_width : float, default=1.0
    n_bins : int or None
        Grid size; needed when ``prior`` is a float and the grid must extend
        past the largest observed time.
    n_samples : int, default=1000
        Posterior draws used for the credible band.
    random_state : int, Generator or None
    """

    def __init__(self, prior=1.0, n_causes=None, bin_width=1.0, n_bins=None, n_samples=1000, random_state=None):
        self.prior = prior
        self.n_causes = n_causes
        self.bin_width = bin_width
        self.n_bins = n_bins
        self.n_samples = n_samples
        self.random_state = random_state

    def _prior_params(self, grid, k) -> SbsParameters:
        prior = self.prior
        if isinstance(prior, CenteredSbs):
            prior = centered_to_raw(prior)
        if isinstance(prior, SbsParameters):
            return prior
        return SbsParameters(np.full((grid.horizon, k + 1), float(prior)), grid)

    def fit(self, X, y=None):
        """Fit to survival outcomes.

        ``X`` is ignored apart from its length; pass the outcomes as ``y``
        (``(n, 2)`` rows of time and status, or a structured array). For
        convenience ``fit(y)`` also works.
        """
        if y is None:
            X, y = None, X
        times, status = check_survival_y(y, self.n_causes)
        prior = self.prior
        if isinstance(prior, (SbsParameters, CenteredSbs)):
            grid = prior.grid
            k = prior.k
        else:
            k = self.n_causes if self.n_causes is not None else max(1, int(status.max()))
            grid = make_grid(times, self.bin_width, horizon=self.n_bins)
        bins, status = discretize(times, status, grid)
        self.grid_ = grid
        self.n_causes_ = k
        self.stats_ = count_statistics((bins, status), grid.horizon, k)
        self.prior_ = self._prior_params(grid, k)
        self.posterior_ = posterior_update(self.prior_, self.stats_)
        self.predictive_ = predictive_distribution(self.posterior_)
        self.classical_ = kalbfleisch_prentice(self.stats_, grid)
        draws = sample_increments(self.posterior_, self.n_samples, check_rng(self.random_state))
        cum = np.cumsum(draws, axis=1)
        self.lower_, self.upper_ = np.quantile(cum, [0.025, 0.975], axis=0)
        return self

    def predict_cumulative_incidence(self, times=None) -> np.ndarray:
        """Posterior mean ``F(t, c)`` at raw ``times`` (all bin edges by default)."""
        check_is_fitted(self, "posterior_")
        return _lookup(self.predictive_.cumulative, self.grid_, times)

    def credible_band(self, times=None):
        """Pointwise 95% band ``(lower, upper)`` of ``F(t, c)``."""
        check_is_fitted(self, "posterior_")
        return _lookup(self.lower_, self.grid_, times), _lookup(self.upper_, self.grid_, times)

    def sample_posterior(self, size: int, random_state=None) -> np.ndarray:
        """Draws of the increments ``dF`` from the posterior, shape ``(size, T, k)``."""
        check_is_fitted(self, "posterior_")
        return sample_increments(self.posterior_, size, check_rng(random_state))


class SbsRegressor(BaseEstimator):
    """Cumulative-incidence regression with profile-wise SBS priors.

    Parameters
    ----------
    m : float, default=1.0
        Reinforcement mass; small values keep each profile close to the
        parametric centring model.
    family : {"weibull", "lognormal"}
    likelihood : {"sbs", "parametric"}
    n_iter, burn_in, thin : int
    proposal_scale : float or None
    fixed_shape : float or None
    prior : dict or None
        Extra :class:`RegressionConfig` prior settings (``b_mean``, ``b_sd``,
        ``v_mean``, ``v_sd``, ``shape_a``, ``shape_rate``).
    n_causes : int or None
    bin_width : float, default=1.0
    n_bins : int or None
    random_state : int or None

    Notes
    -----
    ``X`` holds covariates without the intercept column, which is added.
    """

    def __init__(
        self,
        m=1.0,
        family="weibull",
        likelihood="sbs",
        n_iter=26000,
        burn_in=1000,
        thin=25,
        proposal_scale=None,
        fixed_shape=None,
        prior=None,
        n_causes=None,
        bin_width=1.0,
        n_bins=None,
        random_state=None,
    ):
        self.m = m
        self.family = family
        self.likelihood = likelihood
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.thin = thin
        self.proposal_scale = proposal_scale
        self.fixed_shape = fixed_shape
        self.prior = prior
        self.n_causes = n_causes
        self.bin_width = bin_width
        self.n_bins = n_bins
        self.random_state = random_state

    def _config(self) -> RegressionConfig:
        return RegressionConfig(
            m=self.m,
            n_iter=self.n_iter,
            burn_in=self.burn_in,
            thin=self.thin,
            proposal_scale=self.proposal_scale,
            family=self.family,
            likelihood=self.likelihood,
            fixed_shape=self.fixed_shape,
            **(self.prior or {}),
        )

    def fit(self, X, y):
        times, status = check_survival_y(y, self.n_causes)
        X = check_covariates(X, len(times))
        k = self.n_causes if self.n_causes is not None else max(1, int(status.max()))
        grid = make_grid(times, self.bin_width, horizon=self.n_bins)
        bins, status = discretize(times, status, grid)
        design = np.column_stack([np.ones(len(bins)), X])
        self.config_ = self._config()
        self.sample_ = CensoredSample(bins, status, grid, k, design)
        self.grid_ = grid
        self.n_causes_ = k
        self.n_features_in_ = X.shape[1]
        self.chain_ = rwmh_sample(self.sample_, self.config_, check_rng(self.random_state))
        return self

    def predict_curve(self, x, random_state=None) -> PredictiveCurve:
        """Predictive curve with bands for one covariate row (no intercept)."""
        check_is_fitted(self, "chain_")
        w = np.concatenate([[1.0], np.asarray(x, dtype=float).ravel()])
        if w.size != self.n_features_in_ + 1:
            raise ValueError(f"expected {self.n_features_in_} covariates, got {w.size - 1}")
        rs = self.random_state if random_state is None else random_state
        return predictive_for_profile(self.chain_, self.sample_, w, self.config_, check_rng(rs))

    def predict_cumulative_incidence(self, X, times=None) -> np.ndarray:
        """Posterior mean ``F(t, c | x)`` for each row of ``X``.

        Returns an array of shape ``(n, len(times), k)``; with ``times=None``
        the rows are the bin edges ``tau_1..tau_T``.
        """
        check_is_fitted(self, "chain_")
        X = check_covariates(X)
        out = []
        for x in X:
            sub = self.predict_curve(x).subdistribution(analytic=True)
            out.append(_lookup(sub.cumulative, self.grid_, times))
        return np.stack(out)

    def predictive_subdistribution(self, x) -> SubdistributionFunction:
        return self.predict_curve(x).subdistribution(analytic=True)
