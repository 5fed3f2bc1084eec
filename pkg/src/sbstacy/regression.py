"""Cumulative-incidence regression with SBS priors centred on a parametric model.

Each distinct covariate profile ``w`` gets its own subdistribution ``F_w``
with prior ``SBS(omega0(theta, w) / m, F0(. | theta, w))``; profiles are
conditionally independent given ``theta``. ``theta`` is sampled with a
random-walk Metropolis-Hastings algorithm targeting its marginal posterior.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from ._validation import check_positive_int, check_rng
from .centering import (
    DEFAULT_WEIGHT_CAP,
    RegressionTheta,
    _weights,
    centered_alpha,
    centering_arrays,
    get_family,
)
from .data import CensoredSample
from .diagnostics import geweke_diagnostic
from .posterior import CountStatistics, _loglik_from_counts
from .process import SubdistributionFunction, TimeGrid, _log_dirichlet, _moment_tables

__all__ = [
    "DEFAULT_V_INTERCEPT",
    "RegressionConfig",
    "McmcChain",
    "ModeResult",
    "PredictiveCurve",
    "ConcentrationCurve",
    "LogPosterior",
    "log_poch",
    "marginal_log_likelihood",
    "parametric_log_likelihood",
    "log_prior",
    "posterior_mode",
    "rwmh_sample",
    "predictive_for_profile",
    "prior_theta_sampler",
    "prior_concentration_curve",
]

#: Prior mean of every ``v`` intercept: a median event time of 3650 days.
DEFAULT_V_INTERCEPT = float(np.log(-np.log(0.5) / 3650.0))

_STIRLING_THRESHOLD = 1e3


@dataclass
class RegressionConfig:
    """Model, prior and sampler settings.

    Parameters
    ----------
    m : float, default=1.0
        Reinforcement mass; the per-profile prior precision is ``omega0 / m``.
    b_mean, b_sd : float or array of shape (k - 1, p)
        Normal prior on the logistic coefficients.
    v_mean : float, array of shape (k, p) or None
        Normal prior means of the time-model coefficients. None puts
        :data:`DEFAULT_V_INTERCEPT` on the intercepts and zero elsewhere.
    v_sd : float or array of shape (k, p)
    shape_a, shape_rate : float, default=(11, 10)
        Gamma prior (shape, rate) on each ``u_c``.
    n_iter, burn_in, thin : int
        Chain settings; ``(n_iter - burn_in) // thin`` draws are kept.
    proposal_scale : float or None
        Multiplier of the inverse negative Hessian. None means ``2.4**2 / d``.
    seed : int or None
    family : {"weibull", "lognormal"}
    likelihood : {"sbs", "parametric"}
        ``"parametric"`` drops the SBS layer and uses ``F0`` directly.
    fixed_shape : float, array of shape (k,) or None
        Holds every ``u_c`` fixed instead of sampling it.
    weight_cap : float
        Upper bound on ``omega0_t``.
    """

    m: float = 1.0
    b_mean: float | np.ndarray = 0.0
    b_sd: float | np.ndarray = 1.0
    v_mean: float | np.ndarray | None = None
    v_sd: float | np.ndarray = 1.0
    shape_a: float = 11.0
    shape_rate: float = 10.0
    n_iter: int = 26000
    burn_in: int = 1000
    thin: int = 25
    proposal_scale: float | None = None
    seed: int | None = None
    family: str = "weibull"
    likelihood: str = "sbs"
    fixed_shape: float | np.ndarray | None = None
    weight_cap: float = DEFAULT_WEIGHT_CAP

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0):
            raise ValueError(f"m must be positive and finite, got {self.m}")
        self.n_iter = check_positive_int(self.n_iter, "n_iter")
        self.burn_in = check_positive_int(self.burn_in, "burn_in", minimum=0)
        self.thin = check_positive_int(self.thin, "thin")
        if self.n_iter <= self.burn_in:
            raise ValueError("n_iter must exceed burn_in")
        if self.shape_a <= 0 or self.shape_rate <= 0:
            raise ValueError("gamma prior parameters must be positive")
        if np.any(np.asarray(self.b_sd) <= 0) or np.any(np.asarray(self.v_sd) <= 0):
            raise ValueError("prior standard deviations must be positive")
        if self.proposal_scale is not None and not self.proposal_scale > 0:
            raise ValueError("proposal_scale must be positive")
        if self.likelihood not in ("sbs", "parametric"):
            raise ValueError("likelihood must be 'sbs' or 'parametric'")
        if self.fixed_shape is not None and np.any(np.asarray(self.fixed_shape) <= 0):
            raise ValueError("fixed_shape must be positive")
        get_family(self.family)

    @property
    def n_keep(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin

    def prior_arrays(self, k: int, p: int):
        """Broadcast prior means and SDs to ``(k - 1, p)`` and ``(k, p)``."""
        bm = np.broadcast_to(np.asarray(self.b_mean, dtype=float), (k - 1, p))
        bs = np.broadcast_to(np.asarray(self.b_sd, dtype=float), (k - 1, p))
        if self.v_mean is None:
            vm = np.zeros((k, p))
            vm[:, 0] = DEFAULT_V_INTERCEPT
        else:
            vm = np.broadcast_to(np.asarray(self.v_mean, dtype=float), (k, p))
        vs = np.broadcast_to(np.asarray(self.v_sd, dtype=float), (k, p))
        return bm, bs, vm, vs

    def shape_vector(self, k: int) -> np.ndarray | None:
        if self.fixed_shape is None:
            return None
        return np.broadcast_to(np.asarray(self.fixed_shape, dtype=float), (k,)).copy()

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            out[name] = val.tolist() if isinstance(val, np.ndarray) else val
        return out


# --------------------------------------------------------------------------
# likelihoods and prior


def log_poch(a, n):
    """``log Gamma(a + n) - log Gamma(a)`` for ``a >= 0``, ``n >= 0``.

    Large ``a`` uses a Stirling expansion of the difference, which keeps
    full relative precision where the two log-gamma values nearly cancel.
    ``a = 0`` with ``n > 0`` gives ``-inf``.
    """
    a, n = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(n, dtype=float))
    out = np.zeros(a.shape)
    big = (a > _STIRLING_THRESHOLD) & (n > 0)
    small = (a <= _STIRLING_THRESHOLD) & (n > 0)
    ab, nb = a[big], n[big]
    out[big] = (ab - 0.5) * np.log1p(nb / ab) + nb * np.log(ab + nb) - nb - nb / (12.0 * ab * (ab + nb))
    with np.errstate(divide="ignore"):
        out[small] = gammaln(a[small] + n[small]) - gammaln(a[small])
    out[small & (a == 0)] = -np.inf
    return out if out.ndim else float(out)


def _bin_counts(stats: CountStatistics) -> np.ndarray:
    """Draw counts ``n_{t,d}`` per urn: survivors and censorings pick colour 0."""
    n = stats.events.astype(float)
    n[:, 0] += stats.at_risk_beyond
    return n


def _closed_form_loglik(alpha: np.ndarray, stats: CountStatistics) -> float:
    n = _bin_counts(stats)
    return float(log_poch(alpha, n).sum() - log_poch(alpha.sum(axis=1), n.sum(axis=1)).sum())


def _sequential_loglik(alpha: np.ndarray, times, causes) -> float:
    alpha = alpha.copy()
    total = 0.0
    for t, d in zip(times, causes):
        t = int(t)
        log_r = np.log(alpha[:t, 0]) - np.log(alpha[:t].sum(axis=1))
        if d == 0:
            total += log_r.sum()
            alpha[:t, 0] += 1.0
        else:
            total += log_r[: t - 1].sum() + np.log(alpha[t - 1, d]) - np.log(alpha[t - 1].sum())
            alpha[: t - 1, 0] += 1.0
            alpha[t - 1, d] += 1.0
    return float(total)


def marginal_log_likelihood(
    theta: RegressionTheta,
    sample: CensoredSample,
    m: float,
    family="weibull",
    method: str = "closed",
    cap: float = DEFAULT_WEIGHT_CAP,
) -> float:
    """Log marginal likelihood of ``theta`` with every ``F_w`` integrated out.

    Parameters
    ----------
    method : {"closed", "sequential"}
        ``"sequential"`` multiplies one-step predictive probabilities while
        updating each profile's posterior observation by observation, in
        stored order. ``"closed"`` evaluates the same quantity as a product of
        rising factorials per bin; it does not depend on the order.
    """
    if method not in ("closed", "sequential"):
        raise ValueError("method must be 'closed' or 'sequential'")
    total = 0.0
    for j, w in enumerate(sample.profiles):
        alpha = centered_alpha(theta, w, sample.grid, m, family, cap)
        if method == "closed":
            total += _closed_form_loglik(alpha, sample.profile_stats[j])
        else:
            total += _sequential_loglik(alpha, *sample.profile_observations(j))
    return total


def parametric_log_likelihood(theta: RegressionTheta, sample: CensoredSample, family="weibull") -> float:
    """Censored log-likelihood with ``F = F0(. | theta, w)`` for every profile."""
    total = 0.0
    for j, w in enumerate(sample.profiles):
        inc, surv = centering_arrays(theta, w, sample.grid, family)
        total += _loglik_from_counts(inc, surv[1:], sample.profile_stats[j])
    return total


def log_prior(theta: RegressionTheta, config: RegressionConfig) -> float:
    """Independent normal priors on ``b`` and ``v`` and gamma priors on ``u``.

    When ``config.fixed_shape`` is set the shapes carry no prior term.
    """
    bm, bs, vm, vs = config.prior_arrays(theta.k, theta.p)
    lp = _normal_logpdf(theta.b, bm, bs) + _normal_logpdf(theta.v, vm, vs)
    if config.fixed_shape is None:
        u = np.asarray(theta.u, dtype=float)
        if np.any(u <= 0):
            return -np.inf
        a, r = config.shape_a, config.shape_rate
        lp += np.sum(a * np.log(r) - gammaln(a) + (a - 1.0) * np.log(u) - r * u)
    return float(lp)


def _normal_logpdf(x, mean, sd) -> float:
    z = (x - mean) / sd
    return float(np.sum(-0.5 * z * z - np.log(sd)) - 0.5 * np.log(2 * np.pi) * z.size)


# --------------------------------------------------------------------------
# working parameterisation


class _Standardizer:
    """Affine map between coefficients on standardised and raw covariates.

    Non-intercept columns are centred and scaled by their sample mean and
    SD; constant columns are left as they are.
    """

    def __init__(self, X: np.ndarray):
        p = X.shape[1]
        mu, sd = np.zeros(p), np.ones(p)
        if X.shape[0] > 1 and p > 1:
            s = X[:, 1:].std(axis=0)
            ok = s > 0
            mu[1:][ok] = X[:, 1:].mean(axis=0)[ok]
            sd[1:][ok] = s[ok]
        self.mu, self.sd = mu, sd
        M = np.diag(1.0 / sd)
        M[0, 1:] = -mu[1:] / sd[1:]
        self.to_raw = M
        self.to_std = np.linalg.inv(M)

    def raw(self, coef_std: np.ndarray) -> np.ndarray:
        return coef_std @ self.to_raw.T

    def std(self, coef_raw: np.ndarray) -> np.ndarray:
        return coef_raw @ self.to_std.T


class LogPosterior:
    """Log posterior of ``theta`` in the sampler's working coordinates.

    The working vector holds the ``b`` and ``v`` coefficients on
    standardised covariates followed by ``log u`` (omitted when the shapes
    are fixed). The log-Jacobian ``sum log u`` is included.
    """

    def __init__(self, sample: CensoredSample, config: RegressionConfig):
        self.sample = sample
        self.config = config
        self.k, self.p = sample.k, sample.p
        self.family = get_family(config.family)
        self.fixed_u = config.shape_vector(self.k)
        self.std = _Standardizer(sample.X)
        self.nb, self.nv = (self.k - 1) * self.p, self.k * self.p
        self.dim = self.nb + self.nv + (self.k if self.fixed_u is None else 0)

    def theta(self, z) -> RegressionTheta:
        z = np.asarray(z, dtype=float)
        b = self.std.raw(z[: self.nb].reshape(self.k - 1, self.p))
        v = self.std.raw(z[self.nb : self.nb + self.nv].reshape(self.k, self.p))
        u = np.exp(z[self.nb + self.nv :]) if self.fixed_u is None else self.fixed_u
        return RegressionTheta(b, v, u)

    def to_working(self, theta: RegressionTheta) -> np.ndarray:
        parts = [self.std.std(theta.b).ravel(), self.std.std(theta.v).ravel()]
        if self.fixed_u is None:
            parts.append(np.log(theta.u))
        return np.concatenate(parts)

    def prior_mean_theta(self) -> RegressionTheta:
        bm, _, vm, _ = self.config.prior_arrays(self.k, self.p)
        if self.fixed_u is None:
            u = np.full(self.k, self.config.shape_a / self.config.shape_rate)
        else:
            u = self.fixed_u
        return RegressionTheta(bm, vm, u)

    def log_likelihood(self, theta: RegressionTheta) -> float:
        if self.sample.n == 0:
            return 0.0
        if self.config.likelihood == "parametric":
            return parametric_log_likelihood(theta, self.sample, self.family)
        return marginal_log_likelihood(
            theta, self.sample, self.config.m, self.family, "closed", self.config.weight_cap
        )

    def __call__(self, z) -> float:
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            return -np.inf
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                theta = self.theta(z)
        except ValueError:
            return -np.inf
        lp = log_prior(theta, self.config)
        if not np.isfinite(lp):
            return -np.inf
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            ll = self.log_likelihood(theta)
        if self.fixed_u is None:
            lp += z[self.nb + self.nv :].sum()
        out = lp + ll
        return float(out) if np.isfinite(out) else -np.inf


def _log_accept_ratio(log_post_current: float, log_post_proposed: float) -> float:
    """Metropolis log-ratio for a symmetric proposal."""
    if log_post_proposed == -np.inf:
        return -np.inf
    return log_post_proposed - log_post_current


# --------------------------------------------------------------------------
# mode, Hessian and sampler


@dataclass(frozen=True, eq=False)
class ModeResult:
    """Maximiser of the log posterior and the curvature there."""

    theta: RegressionTheta
    z: np.ndarray
    log_posterior: float
    hessian: np.ndarray
    converged: bool
    message: str


def _hessian(f, z: np.ndarray) -> np.ndarray:
    """Central-difference Hessian with steps ``1e-4 * (1 + |z_i|)``."""
    d = z.size
    h = 1e-4 * (1.0 + np.abs(z))
    H = np.empty((d, d))
    f0 = f(z)
    E = np.diag(h)
    for i in range(d):
        H[i, i] = (f(z + E[i]) - 2.0 * f0 + f(z - E[i])) / h[i] ** 2
        for j in range(i):
            H[i, j] = (
                f(z + E[i] + E[j]) - f(z + E[i] - E[j]) - f(z - E[i] + E[j]) + f(z - E[i] - E[j])
            ) / (4.0 * h[i] * h[j])
            H[j, i] = H[i, j]
    return 0.5 * (H + H.T)


def _proposal_covariance(H: np.ndarray, scale: float) -> np.ndarray:
    """``scale * (-H)^-1`` with eigenvalues floored at ``1e-8``.

    If ``-H`` has a non-positive eigenvalue the diagonal curvatures
    ``|H_ii|`` (also floored) are used instead.
    """
    negH = -0.5 * (H + H.T)
    if not np.all(np.isfinite(negH)):
        negH = np.eye(H.shape[0])
    eigval, eigvec = np.linalg.eigh(negH)
    if eigval.min() > 0:
        eigval = np.maximum(eigval, 1e-8)
        cov = (eigvec / eigval) @ eigvec.T
    else:
        cov = np.diag(1.0 / np.maximum(np.abs(np.diag(negH)), 1e-8))
    return scale * 0.5 * (cov + cov.T)


def posterior_mode(
    sample: CensoredSample, config: RegressionConfig, start: RegressionTheta | None = None
) -> ModeResult:
    """Maximise the log posterior with BFGS in the working coordinates.

    Starts from the prior means unless ``start`` is given. If BFGS reports
    failure, a Nelder-Mead pass continues from the best point found; a
    warning is issued if neither converges.
    """
    target = LogPosterior(sample, config)
    z0 = target.to_working(start if start is not None else target.prior_mean_theta())
    best = {"z": z0, "f": target(z0)}

    def objective(z):
        val = target(z)
        if val > best["f"]:
            best["z"], best["f"] = np.array(z, copy=True), val
        return -val if np.isfinite(val) else 1e300

    res = optimize.minimize(objective, z0, method="BFGS", options={"gtol": 1e-6})
    converged, message = bool(res.success), str(res.message)
    if not converged:
        res = optimize.minimize(
            objective, best["z"], method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 20000, "maxfev": 40000},
        )
        converged, message = bool(res.success), str(res.message)
        if not converged:
            warnings.warn(f"posterior mode search did not converge: {message}", RuntimeWarning)
    z = best["z"]
    return ModeResult(target.theta(z), z, best["f"], _hessian(target, z), converged, message)


@dataclass(frozen=True, eq=False)
class McmcChain:
    """Thinned post-burn-in draws of ``theta`` on the original covariate scale.

    Attributes
    ----------
    draws : ndarray of shape (n_keep, d)
        Rows ``(b, v, u)`` in the order of :meth:`RegressionTheta.names`.
    log_posterior : ndarray of shape (n_keep,)
        Working-coordinate log posterior of each kept state.
    acceptance_rate : float
        Fraction of accepted proposals over all iterations.
    geweke : ndarray of shape (d,)
        Geweke z-scores of each coordinate (NaN for a constant coordinate or
        a chain shorter than 20 draws).
    """

    draws: np.ndarray
    log_posterior: np.ndarray
    k: int
    p: int
    acceptance_rate: float
    geweke: np.ndarray
    mode: ModeResult
    proposal_cov: np.ndarray
    n_iter: int
    burn_in: int
    thin: int
    names: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.draws.shape[0]

    def theta(self, i: int) -> RegressionTheta:
        return RegressionTheta.from_vector(self.draws[i], self.k, self.p, log_shape=False)

    def thetas(self):
        for i in range(len(self)):
            yield self.theta(i)

    def posterior_mean(self) -> RegressionTheta:
        return RegressionTheta.from_vector(self.draws.mean(axis=0), self.k, self.p, log_shape=False)


def rwmh_sample(sample: CensoredSample, config: RegressionConfig, random_state=None, start=None) -> McmcChain:
    """Random-walk Metropolis-Hastings for the posterior of ``theta``.

    The chain starts at the posterior mode. Proposals are Gaussian with
    covariance ``proposal_scale * (-H)^-1``, ``H`` the finite-difference
    Hessian at the mode, in working coordinates (standardised covariates,
    ``log u``).
    """
    rng = check_rng(config.seed if random_state is None else random_state)
    target = LogPosterior(sample, config)
    mode = posterior_mode(sample, config, start)
    d = target.dim
    scale = 2.4**2 / d if config.proposal_scale is None else config.proposal_scale
    cov = _proposal_covariance(mode.hessian, scale)
    chol = np.linalg.cholesky(cov)

    z, lp = mode.z.copy(), mode.log_posterior
    keep = config.n_keep
    draws = np.empty((keep, target.nb + target.nv + target.k))
    lps = np.empty(keep)
    accepted, kept = 0, 0
    for it in range(config.n_iter):
        proposal = z + chol @ rng.standard_normal(d)
        lp_prop = target(proposal)
        if np.log(rng.random()) < _log_accept_ratio(lp, lp_prop):
            z, lp = proposal, lp_prop
            accepted += 1
        j = it - config.burn_in
        if j >= 0 and (j + 1) % config.thin == 0 and kept < keep:
            draws[kept] = target.theta(z).to_vector(log_shape=False)
            lps[kept] = lp
            kept += 1
    if keep >= 20:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            geweke = geweke_diagnostic(draws)
    else:
        geweke = np.full(draws.shape[1], np.nan)
    return McmcChain(
        draws, lps, target.k, target.p, accepted / config.n_iter, geweke, mode, cov,
        config.n_iter, config.burn_in, config.thin, RegressionTheta.names(target.k, target.p),
    )


# --------------------------------------------------------------------------
# predictive curves


@dataclass(frozen=True, eq=False)
class PredictiveCurve:
    """Posterior predictive cumulative incidence for one covariate profile.

    Attributes
    ----------
    increments : ndarray of shape (T, k)
        Monte Carlo average of sampled ``dF``.
    expected : ndarray of shape (T, k)
        Average over the chain of the exact posterior mean increments.
    lower, upper : ndarray of shape (T, k)
        Pointwise 2.5% and 97.5% quantiles of sampled ``F(t, c)``.
    """

    grid: TimeGrid
    increments: np.ndarray
    expected: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    profile: np.ndarray
    seen: bool
    n_samples: int

    @property
    def mean(self) -> np.ndarray:
        return np.cumsum(self.increments, axis=0)

    def subdistribution(self, analytic: bool = True) -> SubdistributionFunction:
        inc = self.expected if analytic else self.increments
        return SubdistributionFunction(_clip_total(inc), self.grid)


def _clip_total(inc: np.ndarray) -> np.ndarray:
    total = inc.sum()
    return inc / total if total > 1.0 else inc


def _increments_from_alpha(alpha: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One ``dF`` draw per leading index of ``alpha`` (shape ``(..., T, k + 1)``)."""
    with np.errstate(over="ignore", invalid="ignore"):
        logw = _log_dirichlet(alpha, (), rng)
        log_surv = np.cumsum(logw[..., 0], axis=-1)
        log_prev = np.concatenate([np.zeros(log_surv.shape[:-1] + (1,)), log_surv[..., :-1]], axis=-1)
        return np.exp(logw[..., 1:] + log_prev[..., None])


def predictive_for_profile(
    chain: McmcChain,
    sample: CensoredSample,
    w_new,
    config: RegressionConfig,
    random_state=None,
    draws_per_theta: int = 1,
) -> PredictiveCurve:
    """Average cumulative incidence for profile ``w_new`` over the chain.

    For each ``theta`` in the chain, ``F`` is drawn from the SBS posterior
    given the data of the matching observed profile, or from the prior when
    ``w_new`` was not observed. With ``config.likelihood == "parametric"``
    the draw is ``F0(. | theta, w_new)`` itself.
    """
    rng = check_rng(random_state)
    draws_per_theta = check_positive_int(draws_per_theta, "draws_per_theta")
    w_new = np.asarray(w_new, dtype=float)
    family = get_family(config.family)
    grid = sample.grid
    j = sample.match_profile(w_new) if sample.n else None
    stats = sample.profile_stats[j] if j is not None else None
    n_theta = len(chain)
    if n_theta == 0:
        raise ValueError("chain has no draws")
    T, k = grid.horizon, sample.k
    samples = np.empty((n_theta, draws_per_theta, T, k))
    expected = np.zeros((T, k))
    for i, theta in enumerate(chain.thetas()):
        if config.likelihood == "parametric":
            inc, _ = centering_arrays(theta, w_new, grid, family)
            samples[i] = inc
            expected += inc
            continue
        alpha = centered_alpha(theta, w_new, grid, config.m, family, config.weight_cap)
        if stats is not None:
            alpha = alpha + stats.events
            alpha[:, 0] += stats.at_risk_beyond
        expected += _moment_tables(alpha)[0]
        samples[i] = _increments_from_alpha(np.broadcast_to(alpha, (draws_per_theta,) + alpha.shape), rng)
    samples = samples.reshape(-1, T, k)
    cum = np.cumsum(samples, axis=1)
    lower, upper = np.quantile(cum, [0.025, 0.975], axis=0)
    return PredictiveCurve(
        grid, samples.mean(axis=0), expected / n_theta, lower, upper, w_new,
        stats is not None, samples.shape[0],
    )


# --------------------------------------------------------------------------
# prior concentration


def prior_theta_sampler(config: RegressionConfig, k: int, p: int):
    """Callable ``(rng, size) -> (size, d)`` array of prior draws of ``(b, v, u)``."""
    bm, bs, vm, vs = config.prior_arrays(k, p)
    fixed = config.shape_vector(k)

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        b = rng.normal(bm, bs, size=(size,) + bm.shape).reshape(size, -1)
        v = rng.normal(vm, vs, size=(size,) + vm.shape).reshape(size, -1)
        if fixed is None:
            u = rng.gamma(config.shape_a, 1.0 / config.shape_rate, size=(size, k))
        else:
            u = np.broadcast_to(fixed, (size, k))
        return np.concatenate([b, v, u], axis=1)

    sample.k, sample.p = k, p
    return sample


@dataclass(frozen=True, eq=False)
class ConcentrationCurve:
    """Prior SD of ``dF - dF0`` per bin and cause.

    ``sigma[i]`` belongs to ``m_values[i]``; ``sigma_inf`` is the bound
    ``sqrt(E[dF0 (1 - dF0)])`` reached as ``m`` grows.
    """

    m_values: np.ndarray
    sigma: np.ndarray
    sigma_se: np.ndarray
    sigma_inf: np.ndarray
    sigma_inf_se: np.ndarray
    grid: TimeGrid
    n_draws: int


def _sd_with_se(x: np.ndarray):
    n = x.shape[0]
    dev2 = (x - x.mean(axis=0)) ** 2
    var = dev2.mean(axis=0) * n / (n - 1)
    sd = np.sqrt(var)
    se_var = dev2.std(axis=0, ddof=1) / np.sqrt(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(sd > 0, se_var / (2.0 * sd), np.sqrt(se_var))
    return sd, se


def prior_concentration_curve(
    theta_sampler,
    w,
    m_values,
    grid: TimeGrid,
    random_state=None,
    n_draws: int = 40_000,
    family="weibull",
    cap: float = DEFAULT_WEIGHT_CAP,
) -> ConcentrationCurve:
    """Monte Carlo ``sigma_m(t, c; w)`` under the prior of ``theta``.

    The same ``theta`` draws are shared across all values of ``m``.
    """
    rng = check_rng(random_state)
    n_draws = check_positive_int(n_draws, "n_draws", minimum=2)
    m_values = np.atleast_1d(np.asarray(m_values, dtype=float))
    w = np.asarray(w, dtype=float)
    k, p = theta_sampler.k, theta_sampler.p
    family = get_family(family)
    vecs = theta_sampler(rng, n_draws)
    T = grid.horizon
    inc0 = np.empty((n_draws, T, k))
    surv0 = np.empty((n_draws, T + 1))
    for i, vec in enumerate(vecs):
        theta = RegressionTheta.from_vector(vec, k, p, log_shape=False)
        inc0[i], surv0[i] = centering_arrays(theta, w, grid, family)
    omega = np.stack([_weights(inc0[i], grid, cap) for i in range(n_draws)])
    sigma = np.empty((m_values.size, T, k))
    sigma_se = np.empty_like(sigma)
    for a, m in enumerate(m_values):
        scale = omega / m
        alpha = np.empty((n_draws, T, k + 1))
        alpha[..., 0] = scale * surv0[:, 1:]
        alpha[..., 1:] = scale[..., None] * inc0
        alpha = np.maximum(alpha, np.finfo(float).tiny)
        diff = _increments_from_alpha(alpha, rng) - inc0
        sigma[a], sigma_se[a] = _sd_with_se(diff)
    q = inc0 * (1.0 - inc0)
    mean_q = q.mean(axis=0)
    sigma_inf = np.sqrt(mean_q)
    with np.errstate(divide="ignore", invalid="ignore"):
        se_q = q.std(axis=0, ddof=1) / np.sqrt(n_draws)
        sigma_inf_se = np.where(sigma_inf > 0, se_q / (2.0 * sigma_inf), 0.0)
    return ConcentrationCurve(m_values, sigma, sigma_se, sigma_inf, sigma_inf_se, grid, n_draws)
