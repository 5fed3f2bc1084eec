"""Parametric centring subdistributions for the regression model.

The centring model factorises as ``F0(t, c | theta, w) = pi_c(w) * G_c(tau_t | w)``
where ``pi`` is a multinomial logistic model for the event type and ``G_c``
a discretised continuous-time CDF per cause (Weibull by default, log-normal
as an alternative family).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .process import CenteredSbs, SubdistributionFunction, TimeGrid

__all__ = [
    "RegressionTheta",
    "WeibullFamily",
    "LogNormalFamily",
    "get_family",
    "multinomial_logistic",
    "discrete_weibull_cdf",
    "centering_arrays",
    "centering_subdistribution",
    "weight_schedule",
    "centered_prior",
    "centered_alpha",
    "DEFAULT_WEIGHT_CAP",
]

DEFAULT_WEIGHT_CAP = 1e12

# Dirichlet parameters are kept at least this large so that deep-tail
# underflow of the centring increments cannot produce a zero parameter.
_ALPHA_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True, eq=False)
class RegressionTheta:
    """Centring parameters ``theta = (b, v, u)``.

    Attributes
    ----------
    b : ndarray of shape (k - 1, p)
        Multinomial logistic coefficients; cause ``k`` is the reference.
    v : ndarray of shape (k, p)
        Linear predictor coefficients of each cause's time distribution.
    u : ndarray of shape (k,)
        Positive shape parameters.
    """

    b: np.ndarray
    v: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        k, p = v.shape
        b = np.asarray(self.b, dtype=float).reshape(k - 1, p)
        u = np.asarray(self.u, dtype=float).reshape(k)
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v)) and np.all(np.isfinite(u))):
            raise ValueError("theta must be finite")
        if np.any(u <= 0):
            raise ValueError("shape parameters u must be positive")
        for name, arr in (("b", b), ("v", v), ("u", u)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return self.v.shape[0]

    @property
    def p(self) -> int:
        return self.v.shape[1]

    def to_vector(self, log_shape: bool = True) -> np.ndarray:
        """Flatten as ``(b, v, u)``, with ``log u`` when ``log_shape``."""
        u = np.log(self.u) if log_shape else self.u
        return np.concatenate([self.b.ravel(), self.v.ravel(), u])

    @classmethod
    def from_vector(cls, x, k: int, p: int, log_shape: bool = True) -> RegressionTheta:
        x = np.asarray(x, dtype=float)
        nb, nv = (k - 1) * p, k * p
        if x.size != nb + nv + k:
            raise ValueError(f"expected {nb + nv + k} entries, got {x.size}")
        u = x[nb + nv:]
        return cls(x[:nb], x[nb:nb + nv].reshape(k, p), np.exp(u) if log_shape else u)

    @staticmethod
    def names(k: int, p: int) -> list[str]:
        out = [f"b{c}_{j}" for c in range(1, k) for j in range(p)]
        out += [f"v{c}_{j}" for c in range(1, k + 1) for j in range(p)]
        out += [f"u{c}" for c in range(1, k + 1)]
        return out

    def __repr__(self):
        return (
            f"RegressionTheta(b={self.b.tolist()}, v={self.v.tolist()}, "
            f"u={self.u.tolist()})"
        )


class WeibullFamily:
    """``G(tau) = 1 - exp(-tau^u * exp(w'v))``."""

    name = "weibull"

    @staticmethod
    def log_survival(tau, linear, shape):
        tau = np.asarray(tau, dtype=float)
        with np.errstate(divide="ignore"):
            log_h = shape * np.log(tau) + linear
        return -np.exp(log_h)


class LogNormalFamily:
    """``G(tau) = Phi((log tau - w'v) / u)``."""

    name = "lognormal"

    @staticmethod
    def log_survival(tau, linear, shape):
        tau = np.asarray(tau, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(tau) - linear) / shape
        return log_ndtr(-z)


_FAMILIES = {"weibull": WeibullFamily, "lognormal": LogNormalFamily}


def get_family(family):
    if isinstance(family, str):
        try:
            return _FAMILIES[family]
        except KeyError:
            raise ValueError(
                f"unknown centring family {family!r}; choose from {sorted(_FAMILIES)}"
            ) from None
    return family


def _logsumexp(x: np.ndarray, axis: int = -1, keepdims: bool = False) -> np.ndarray:
    # plain numpy; scipy's version carries array-API overhead in hot loops
    top = np.max(x, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    out = np.log(np.sum(np.exp(x - top), axis=axis, keepdims=True)) + top
    return out if keepdims else np.squeeze(out, axis=axis)


def _check_w(theta: RegressionTheta, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != theta.p:
        raise ValueError(
            f"covariate vector has {w.shape[-1]} entries, theta expects {theta.p}"
        )
    return w


def _log_type_probs(theta: RegressionTheta, w: np.ndarray) -> np.ndarray:
    eta = w @ theta.b.T
    eta = np.concatenate([eta, np.zeros(eta.shape[:-1] + (1,))], axis=-1)
    return eta - _logsumexp(eta, axis=-1, keepdims=True)


def multinomial_logistic(theta: RegressionTheta, w) -> np.ndarray:
    """Event-type probabilities ``pi_c(w)``; shape ``(k,)`` or ``(n, k)``."""
    w = _check_w(theta, w)
    return np.exp(_log_type_probs(theta, w))


def discrete_weibull_cdf(theta: RegressionTheta, c: int, w, t: int, grid: TimeGrid | None = None) -> float:
    """``G_c(tau_t | w)`` of the Weibull time model for cause ``c`` (1-based)."""
    w = _check_w(theta, w)
    if not 1 <= c <= theta.k:
        raise IndexError(f"cause {c} outside 1..{theta.k}")
    tau = float(t) if grid is None else float(grid.edges[t])
    log_s = WeibullFamily.log_survival(tau, w @ theta.v[c - 1], theta.u[c - 1])
    return float(-np.expm1(log_s))


def centering_arrays(theta: RegressionTheta, w, grid: TimeGrid, family="weibull"):
    """Increments and survival of the centring subdistribution.

    Returns
    -------
    increments : ndarray of shape (T, k)
    survival : ndarray of shape (T + 1,)
        ``S0(t)`` for ``t = 0..T``, evaluated directly as
        ``sum_c pi_c (1 - G_c(tau_t))`` rather than as one minus a sum.
    """
    fam = get_family(family)
    w = _check_w(theta, w)
    log_pi = _log_type_probs(theta, w)
    linear = theta.v @ w
    log_s = fam.log_survival(grid.edges[:, None], linear[None, :], theta.u[None, :])
    # G(tau_t) - G(tau_{t-1}) = S(tau_{t-1}) * (1 - S(tau_t) / S(tau_{t-1}))
    with np.errstate(invalid="ignore"):
        step = -np.expm1(log_s[1:] - log_s[:-1])
    step = np.nan_to_num(step, nan=0.0)
    log_inc = log_pi + log_s[:-1] + np.log(np.clip(step, 0.0, None) + 0.0)
    with np.errstate(divide="ignore"):
        increments = np.exp(log_inc)
    with np.errstate(divide="ignore"):
        survival = np.exp(_logsumexp(log_pi + log_s, axis=1))
    survival[0] = 1.0
    return increments, survival


def centering_subdistribution(theta: RegressionTheta, w, grid: TimeGrid, family="weibull") -> SubdistributionFunction:
    """``F0(. | theta, w)`` on ``grid`` as a :class:`SubdistributionFunction`."""
    inc, _ = centering_arrays(theta, w, grid, family)
    total = inc.sum()
    if total > 1.0:
        inc = inc / total
    return SubdistributionFunction(inc, grid)


def weight_schedule(theta: RegressionTheta, w, grid: TimeGrid, family="weibull", cap: float = DEFAULT_WEIGHT_CAP) -> np.ndarray:
    """Precision weights ``omega0_t = (tau_t - tau_{t-1}) / sum_d dF0(t, d)``.

    Large where the centring model expects few events. Bins whose increment
    underflows, or whose weight exceeds ``cap``, get weight ``cap``.
    """
    inc, _ = centering_arrays(theta, w, grid, family)
    return _weights(inc, grid, cap)


def _weights(inc: np.ndarray, grid: TimeGrid, cap: float) -> np.ndarray:
    dg = inc.sum(axis=1)
    with np.errstate(divide="ignore", over="ignore"):
        omega = np.where(dg > 0, grid.widths / dg, np.inf)
    return np.minimum(omega, cap)


def centered_alpha(theta: RegressionTheta, w, grid: TimeGrid, m: float, family="weibull", cap: float = DEFAULT_WEIGHT_CAP) -> np.ndarray:
    """Raw parameters of ``SBS(omega0 / m, F0(. | theta, w))`` as a ``(T, k + 1)`` array.

    Entries are floored at the smallest positive normal double.
    """
    if not m > 0:
        raise ValueError(f"reinforcement mass m must be positive, got {m}")
    inc, surv = centering_arrays(theta, w, grid, family)
    omega = _weights(inc, grid, cap) / m
    alpha = np.empty((grid.horizon, theta.k + 1))
    alpha[:, 0] = omega * surv[1:]
    alpha[:, 1:] = omega[:, None] * inc
    return np.maximum(alpha, _ALPHA_FLOOR)


def centered_prior(theta: RegressionTheta, w, grid: TimeGrid, m: float, family="weibull", cap: float = DEFAULT_WEIGHT_CAP) -> CenteredSbs:
    """The per-profile prior ``SBS(omega0 / m, F0(. | theta, w))`` in centred form."""
    F0 = centering_subdistribution(theta, w, grid, family)
    return CenteredSbs(F0, weight_schedule(theta, w, grid, family, cap) / m)
