"""Conjugate updating of SBS parameters under right censoring.

Also holds the classical discrete-time estimators (Kaplan-Meier,
Nelson-Aalen and the Kalbfleisch-Prentice cumulative incidence) that the
posterior predictive reduces to as the prior precision goes to zero.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable
from dataclasses import dataclass

import numpy as np

from ._validation import check_observations
from .process import (
    CenteredSbs,
    SbsParameters,
    SubdistributionFunction,
    prior_mean,
)

__all__ = [
    "CensoredObservation",
    "CountStatistics",
    "count_statistics",
    "posterior_update",
    "predictive_distribution",
    "posterior_centering",
    "kaplan_meier",
    "nelson_aalen",
    "kalbfleisch_prentice",
    "censored_log_likelihood",
]


@dataclass(frozen=True)
class CensoredObservation:
    """One binned observation; ``cause == 0`` means right-censored at ``time``."""

    time: int
    cause: int
    profile: Hashable | None = None

    @property
    def observed(self) -> bool:
        return self.cause != 0


def _as_arrays(data):
    if isinstance(data, tuple) and len(data) == 2:
        return np.asarray(data[0]), np.asarray(data[1])
    if isinstance(data, np.ndarray):
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError("observation arrays must have shape (n, 2)")
        return data[:, 0], data[:, 1]
    pairs = [(o.time, o.cause) if isinstance(o, CensoredObservation) else tuple(o) for o in data]
    if any(len(pair) != 2 for pair in pairs):
        raise ValueError("observations must be CensoredObservation or (time, cause) pairs")
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


@dataclass(frozen=True, eq=False)
class CountStatistics:
    """Sufficient statistics of binned censored data.

    Attributes
    ----------
    at_risk_beyond : ndarray of shape (T,)
        ``l_t``, the number of observations with ``t* > t``.
    events : ndarray of shape (T, k + 1)
        ``m_{t,d}``, observations with ``t* = t`` and ``d* = d``; column 0
        counts censorings.
    """

    at_risk_beyond: np.ndarray
    events: np.ndarray

    @property
    def horizon(self) -> int:
        return self.events.shape[0]

    @property
    def k(self) -> int:
        return self.events.shape[1] - 1

    @property
    def n(self) -> int:
        return int(self.events.sum())

    @property
    def at_risk(self) -> np.ndarray:
        """Risk-set size ``l_t + sum_d m_{t,d}`` at the start of bin ``t``."""
        return self.at_risk_beyond + self.events.sum(axis=1)

    def __add__(self, other: CountStatistics) -> CountStatistics:
        if self.events.shape != other.events.shape:
            raise ValueError("cannot add statistics with different shapes")
        return CountStatistics(
            self.at_risk_beyond + other.at_risk_beyond, self.events + other.events
        )


def count_statistics(data, horizon: int, k: int) -> CountStatistics:
    """Counts ``l_t`` and ``m_{t,d}`` of a censored sample.

    ``data`` may be an iterable of :class:`CensoredObservation`, an ``(n, 2)``
    array of ``(time, cause)`` rows or a ``(times, causes)`` pair.
    """
    times, causes = check_observations(*_as_arrays(data), k=k, horizon=horizon)
    events = np.zeros((horizon, k + 1), dtype=np.int64)
    np.add.at(events, (times - 1, causes), 1)
    per_bin = events.sum(axis=1)
    at_risk_beyond = len(times) - np.cumsum(per_bin)
    return CountStatistics(at_risk_beyond, events)


def _stats_for(params_horizon: int, k: int, data) -> CountStatistics:
    if isinstance(data, CountStatistics):
        if data.horizon != params_horizon or data.k != k:
            raise ValueError("count statistics do not match the parameter shape")
        return data
    return count_statistics(data, params_horizon, k)


def posterior_update(prior: SbsParameters, data) -> SbsParameters:
    """Posterior SBS parameters given right-censored data.

    ``alpha*_{t,0} = alpha_{t,0} + l_t + m_{t,0}`` and
    ``alpha*_{t,d} = alpha_{t,d} + m_{t,d}``. Random censoring that is
    independent of ``F`` leads to the same update, so censoring times are
    simply taken as observed.
    """
    stats = _stats_for(prior.horizon, prior.k, data)
    alpha = prior.alpha.copy()
    alpha += stats.events
    alpha[:, 0] += stats.at_risk_beyond
    return SbsParameters(alpha, prior.grid)


def predictive_distribution(params: SbsParameters) -> SubdistributionFunction:
    """Predictive law of a new uncensored observation, ``dF*(t, d) = E[dF(t, d)]``."""
    return SubdistributionFunction(prior_mean(params), params.grid)


def posterior_centering(prior: CenteredSbs, data) -> CenteredSbs:
    """Posterior of ``SBS(omega, F0)`` in centred form ``SBS(omega*, F*)``.

    ``F*`` is built from the posterior hazards ``dA*_c(t)`` and survival
    ``S*(t)``; ``omega*_t = (omega_t S0(t) + l_t + m_{t,0}) / S*(t)``. On a
    bin where ``S*(t) = 0`` (only possible at a degenerate final bin) the
    equivalent form ``omega*_t = sum_d alpha*_{t,d} / S*(t - 1)`` is used.
    """
    F0 = prior.F0
    stats = _stats_for(F0.horizon, F0.k, data)
    omega = prior.omega
    s0 = np.clip(F0.survival, 0.0, None)
    inc0 = F0.increments
    m = stats.events
    l_ = stats.at_risk_beyond

    denom = omega * s0[:-1] + l_ + m.sum(axis=1)
    numer = omega[:, None] * inc0 + m[:, 1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        dA = np.where(denom[:, None] > 0, numer / denom[:, None], 0.0)
    s_star = np.concatenate([[1.0], np.cumprod(1.0 - dA.sum(axis=1))])
    s_star = np.clip(s_star, 0.0, None)
    inc_star = s_star[:-1, None] * dA

    surv_mass = omega * s0[1:] + l_ + m[:, 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        omega_star = np.where(
            s_star[1:] > 0,
            surv_mass / s_star[1:],
            np.where(s_star[:-1] > 0, denom / s_star[:-1], omega),
        )
    return CenteredSbs(SubdistributionFunction(inc_star, F0.grid), omega_star)


def kaplan_meier(stats: CountStatistics) -> np.ndarray:
    """Discrete-time product-limit survival ``S_hat(t)``, ``t = 1..T``.

    Bins with an empty risk set are NaN.
    """
    at_risk = stats.at_risk
    deaths = stats.events[:, 1:].sum(axis=1)
    defined = at_risk > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(defined, 1.0 - deaths / at_risk, np.nan)
    return np.cumprod(factor)


def nelson_aalen(stats: CountStatistics, c: int | None = None) -> np.ndarray:
    """Cumulative cause-specific hazard ``A_hat_c(t)``.

    Returns shape ``(T,)`` for one cause ``c`` (1-based) or ``(T, k)`` when
    ``c`` is None. Bins with an empty risk set are NaN.
    """
    at_risk = stats.at_risk
    with np.errstate(invalid="ignore", divide="ignore"):
        dA = np.where(
            (at_risk > 0)[:, None], stats.events[:, 1:] / at_risk[:, None], np.nan
        )
    A = np.cumsum(dA, axis=0)
    if c is None:
        return A
    if not 1 <= c <= stats.k:
        raise IndexError(f"cause {c} outside 1..{stats.k}")
    return A[:, c - 1]


def kalbfleisch_prentice(stats: CountStatistics, grid=None) -> SubdistributionFunction:
    """Classical cumulative incidence ``F_hat(t, c) = sum_u S_hat(u-1) dA_hat_c(u)``.

    Increments are NaN on bins with an empty risk set.
    """
    at_risk = stats.at_risk
    defined = at_risk > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        dA = np.where(defined[:, None], stats.events[:, 1:] / at_risk[:, None], np.nan)
    s_prev = np.concatenate([[1.0], kaplan_meier(stats)[:-1]])
    return SubdistributionFunction(s_prev[:, None] * dA, grid)


def censored_log_likelihood(F: SubdistributionFunction, data) -> float:
    """Log-likelihood of censored data under a fixed subdistribution ``F``.

    Each event ``(t, d)`` contributes ``log dF(t, d)`` and each censoring at
    ``t`` contributes ``log S(t)``. Events on zero-mass cells give ``-inf``.
    """
    stats = _stats_for(F.horizon, F.k, data)
    return _loglik_from_counts(F.increments, F.survival[1:], stats)


def _loglik_from_counts(increments, survival, stats: CountStatistics) -> float:
    m = stats.events
    with np.errstate(divide="ignore", invalid="ignore"):
        ev = np.where(m[:, 1:] > 0, m[:, 1:] * np.log(increments), 0.0)
        surv = np.clip(survival, 0.0, None)
        cen = np.where(m[:, 0] > 0, m[:, 0] * np.log(surv), 0.0)
    return float(ev.sum() + cen.sum())


def group_statistics(stats_list: Iterable[CountStatistics]) -> CountStatistics:
    """Sum a collection of count statistics over a common grid."""
    stats_list = list(stats_list)
    total = stats_list[0]
    for s in stats_list[1:]:
        total = total + s
    return total
