"""The subdistribution beta-Stacy (SBS) process on a finite discrete horizon.

A realisation of the process is a subdistribution function ``F(t, c)`` for
``t = 1..T`` and causes ``c = 1..k``, built by stick-breaking with independent
Dirichlet weight vectors ``W_t ~ Dirichlet(alpha[t, 0], ..., alpha[t, k])``::

    dF(t, c) = W[t, c] * prod_{u < t} W[u, 0]

Column 0 of ``alpha`` is the "survive this bin" mass, columns ``1..k`` the
per-cause event masses. Time bins and causes are 1-based in the public
functions that take explicit indices and 0-based in arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_rng

__all__ = [
    "TimeGrid",
    "SubdistributionFunction",
    "CumulativeHazards",
    "SbsParameters",
    "CenteredSbs",
    "DEFAULT_RECURRENCY_TOL",
    "validate_recurrency",
    "centered_to_raw",
    "prior_mean",
    "prior_second_moment",
    "prior_variance",
    "sample_sbs",
    "sample_increments",
    "sample_via_decomposition",
    "sample_increments_decomposition",
    "hazards_from_subdistribution",
    "subdistribution_from_hazards",
]

DEFAULT_RECURRENCY_TOL = 1e-6

# Products over more bins than this are accumulated as sums of logs.
_LOG_SPACE_MIN_BINS = 50

# Relative slack for "sums to at most one" checks.
_MASS_TOL = 1e-9

# Tail mass below this is treated as exhausted by centered_to_raw.
_EXHAUSTED_TOL = 1e-12


def _readonly(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _exclusive_cumprod(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """``out[..., t] = prod_{u < t} x[..., u]`` with an empty product of one."""
    x = np.asarray(x, dtype=float)
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    if n > _LOG_SPACE_MIN_BINS:
        with np.errstate(divide="ignore"):
            logs = np.log(x)
        csum = np.cumsum(logs, axis=-1)
        out = np.empty_like(x)
        out[..., 0] = 1.0
        out[..., 1:] = np.exp(csum[..., :-1])
    else:
        out = np.ones_like(x)
        if n > 1:
            out[..., 1:] = np.cumprod(x[..., :-1], axis=-1)
    return np.moveaxis(out, -1, axis)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Partition ``(0, tau_1], (tau_1, tau_2], ..., (tau_{T-1}, tau_T]``.

    Parameters
    ----------
    horizon : int
        Number of bins ``T``.
    bin_edges : array-like of float, optional
        Either the ``T`` right edges ``tau_1 < ... < tau_T`` or all ``T + 1``
        edges starting from ``tau_0 = 0``. Defaults to ``tau_t = t``.
    """

    horizon: int
    bin_edges: np.ndarray | None = None

    def __post_init__(self):
        check_positive_int(self.horizon, "horizon")
        if self.bin_edges is None:
            return
        edges = np.asarray(self.bin_edges, dtype=float).ravel()
        if edges.size == self.horizon:
            edges = np.concatenate([[0.0], edges])
        if edges.size != self.horizon + 1:
            raise ValueError(
                f"bin_edges must have {self.horizon} or {self.horizon + 1} "
                f"entries, got {edges.size}"
            )
        if edges[0] != 0.0:
            raise ValueError("the first bin edge must be tau_0 = 0")
        if not np.all(np.isfinite(edges)) or np.any(np.diff(edges) <= 0):
            raise ValueError("bin_edges must be finite and strictly increasing")
        object.__setattr__(self, "bin_edges", _readonly(edges))

    @classmethod
    def uniform(cls, horizon: int, width: float = 1.0) -> TimeGrid:
        """Grid of ``horizon`` bins of equal ``width``."""
        if not width > 0:
            raise ValueError(f"bin width must be positive, got {width}")
        if width == 1.0:
            return cls(horizon)
        return cls(horizon, width * np.arange(horizon + 1))

    @property
    def edges(self) -> np.ndarray:
        """All edges ``tau_0 = 0, tau_1, ..., tau_T``."""
        if self.bin_edges is None:
            return np.arange(self.horizon + 1, dtype=float)
        return self.bin_edges

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def bin_of(self, times) -> np.ndarray:
        """Bin index ``t`` with ``tau_{t-1} < time <= tau_t`` (right-closed)."""
        times = np.asarray(times, dtype=float)
        if np.any(times <= 0):
            raise ValueError("times must be strictly positive")
        idx = np.searchsorted(self.edges, times, side="left")
        if np.any(idx > self.horizon):
            raise ValueError(f"times beyond the last edge {self.edges[-1]}")
        return idx.astype(np.int64)

    def truncate(self, horizon: int) -> TimeGrid:
        if not 1 <= horizon <= self.horizon:
            raise ValueError(f"cannot truncate a {self.horizon}-bin grid to {horizon}")
        if self.bin_edges is None:
            return TimeGrid(horizon)
        return TimeGrid(horizon, self.bin_edges[: horizon + 1])

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.horizon, self.edges.tobytes()))


def _as_grid(grid, horizon: int) -> TimeGrid:
    if grid is None:
        return TimeGrid(horizon)
    if grid.horizon != horizon:
        raise ValueError(f"grid horizon {grid.horizon} does not match {horizon} bins")
    return grid


@dataclass(frozen=True, eq=False)
class SubdistributionFunction:
    """A discrete subdistribution function given by its increments.

    ``increments[t - 1, c - 1]`` is ``dF(t, c) = P(T = t, cause = c)``. Rows
    of NaN are allowed only as a trailing block, where they mark bins on
    which an estimate is undefined (classical estimators past the last
    subject at risk).
    """

    increments: np.ndarray
    grid: TimeGrid | None = None

    def __post_init__(self):
        inc = np.array(self.increments, dtype=float, copy=True)
        if inc.ndim != 2 or inc.shape[0] < 1 or inc.shape[1] < 1:
            raise ValueError("increments must be a (T, k) array with T, k >= 1")
        nan_rows = np.isnan(inc).any(axis=1)
        if nan_rows.any():
            first = int(np.argmax(nan_rows))
            if not nan_rows[first:].all() or not np.isnan(inc[first:]).all():
                raise ValueError("undefined (NaN) bins must form a trailing block")
        finite = inc[~nan_rows]
        if not np.all(np.isfinite(finite)):
            raise ValueError("increments must be finite")
        if np.any(finite < 0):
            raise ValueError("increments must be non-negative")
        if finite.sum() > 1 + _MASS_TOL:
            raise ValueError(f"total mass {finite.sum()!r} exceeds one")
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "grid", _as_grid(self.grid, inc.shape[0]))

    @property
    def k(self) -> int:
        return self.increments.shape[1]

    @property
    def horizon(self) -> int:
        return self.increments.shape[0]

    @property
    def defined(self) -> np.ndarray:
        """Boolean mask of bins on which the function is defined."""
        return ~np.isnan(self.increments).any(axis=1)

    @property
    def cumulative(self) -> np.ndarray:
        """``F(t, c)`` for ``t = 1..T``, shape ``(T, k)``."""
        return np.cumsum(self.increments, axis=0)

    @property
    def survival(self) -> np.ndarray:
        """``S(t) = 1 - sum_c F(t, c)`` for ``t = 0..T``, shape ``(T + 1,)``."""
        total = np.cumsum(self.increments.sum(axis=1))
        return np.concatenate([[1.0], 1.0 - total])

    @property
    def tail_mass(self) -> float:
        """Mass ``S(T)`` left beyond the horizon."""
        return float(self.survival[-1])


@dataclass(frozen=True, eq=False)
class CumulativeHazards:
    """Cause-specific hazard increments ``dA_c(t) = dF(t, c) / S(t - 1)``."""

    increments: np.ndarray
    grid: TimeGrid | None = None

    def __post_init__(self):
        inc = np.array(self.increments, dtype=float, copy=True)
        if inc.ndim != 2:
            raise ValueError("increments must be a (T, k) array")
        if not np.all(np.isfinite(inc)) or np.any(inc < 0) or np.any(inc > 1):
            raise ValueError("hazard increments must lie in [0, 1]")
        if np.any(inc.sum(axis=1) > 1 + _MASS_TOL):
            raise ValueError("hazard increments must sum to at most one per bin")
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "grid", _as_grid(self.grid, inc.shape[0]))

    @property
    def k(self) -> int:
        return self.increments.shape[1]

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.increments, axis=0)


@dataclass(frozen=True, eq=False)
class SbsParameters:
    """Parameters ``alpha[t - 1, d] = alpha_{t,d}`` of an SBS process.

    All entries must be strictly positive, except that the survival mass
    ``alpha_{T,0}`` of the final bin may be zero: that is the case where all
    remaining probability is spent at the horizon.
    """

    alpha: np.ndarray
    grid: TimeGrid | None = None

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float, copy=True)
        if alpha.ndim != 2 or alpha.shape[0] < 1 or alpha.shape[1] < 2:
            raise ValueError("alpha must have shape (T, k + 1) with T >= 1, k >= 1")
        if not np.all(np.isfinite(alpha)):
            raise ValueError("alpha must be finite")
        positive = alpha > 0
        positive[-1, 0] |= alpha[-1, 0] == 0
        if not positive.all():
            t, d = np.argwhere(~positive)[0]
            raise ValueError(
                f"alpha[{t + 1}, {d}] = {alpha[t, d]!r}: SBS parameters must be "
                "strictly positive (only the final-bin survival mass may be 0)"
            )
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "grid", _as_grid(self.grid, alpha.shape[0]))

    @property
    def k(self) -> int:
        return self.alpha.shape[1] - 1

    @property
    def horizon(self) -> int:
        return self.alpha.shape[0]

    @property
    def totals(self) -> np.ndarray:
        return self.alpha.sum(axis=1)

    @property
    def terminal_degenerate(self) -> bool:
        """True when the final bin has no survival mass (``alpha_{T,0} = 0``)."""
        return bool(self.alpha[-1, 0] == 0)

    @property
    def tail_mass(self) -> float:
        """``prod_t alpha_{t,0} / sum_d alpha_{t,d}``, the expected mass beyond T."""
        ratios = self.alpha[:, 0] / self.totals
        if self.horizon > _LOG_SPACE_MIN_BINS:
            with np.errstate(divide="ignore"):
                return float(np.exp(np.log(ratios).sum()))
        return float(np.prod(ratios))

    def scaled(self, factor: float) -> SbsParameters:
        return SbsParameters(self.alpha * factor, self.grid)


@dataclass(frozen=True, eq=False)
class CenteredSbs:
    """``SBS(omega, F0)``: an SBS process centred on ``F0`` with precisions ``omega``."""

    F0: SubdistributionFunction
    omega: np.ndarray

    def __post_init__(self):
        omega = np.broadcast_to(
            np.asarray(self.omega, dtype=float), (self.F0.horizon,)
        ).copy()
        if not np.all(np.isfinite(omega)) or np.any(omega <= 0):
            raise ValueError("omega must be finite and strictly positive")
        if not self.F0.defined.all():
            raise ValueError("F0 must be defined on every bin")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def k(self) -> int:
        return self.F0.k

    @property
    def grid(self) -> TimeGrid:
        return self.F0.grid


def validate_recurrency(params: SbsParameters, tol: float = DEFAULT_RECURRENCY_TOL) -> bool:
    """Finite-horizon recurrency check.

    Returns ``True`` iff the expected mass left beyond the horizon,
    ``prod_t alpha_{t,0} / sum_d alpha_{t,d}``, is at most ``tol``.
    """
    return params.tail_mass <= tol


def centered_to_raw(centered: CenteredSbs) -> SbsParameters:
    """Raw parameters of ``SBS(omega, F0)``.

    ``alpha_{t,c} = omega_t dF0(t, c)`` and
    ``alpha_{t,0} = omega_t (1 - sum_d F0(t, d))``. If ``F0`` exhausts its
    mass at some bin, the grid is cut after that bin, which then carries
    ``alpha_{t,0} = 0``.

    Raises
    ------
    ValueError
        If ``F0`` puts zero mass on some cause at a retained bin, which would
        force a zero Dirichlet parameter.
    """
    F0 = centered.F0
    inc = F0.increments
    survival = np.clip(F0.survival[1:], 0.0, None)
    exhausted = survival <= _EXHAUSTED_TOL
    horizon = F0.horizon
    if exhausted.any():
        horizon = int(np.argmax(exhausted)) + 1
    omega = centered.omega[:horizon]
    alpha = np.empty((horizon, F0.k + 1))
    alpha[:, 1:] = omega[:, None] * inc[:horizon]
    alpha[:, 0] = omega * survival[:horizon]
    if exhausted.any():
        alpha[-1, 0] = 0.0
    zero = alpha[:, 1:] <= 0
    if zero.any():
        t, c = np.argwhere(zero)[0]
        raise ValueError(
            f"degenerate centering: F0 has no mass at (t={t + 1}, c={c + 1}), "
            "which would give a zero Dirichlet parameter"
        )
    grid = F0.grid if horizon == F0.horizon else F0.grid.truncate(horizon)
    return SbsParameters(alpha, grid)


def _check_index(params: SbsParameters, t, c):
    if t is None and c is None:
        return None
    if t is None or c is None:
        raise TypeError("give both t and c, or neither")
    if not 1 <= t <= params.horizon:
        raise IndexError(f"time bin {t} outside 1..{params.horizon}")
    if not 1 <= c <= params.k:
        raise IndexError(f"cause {c} outside 1..{params.k}")
    return t - 1, c - 1


def _moment_tables(alpha: np.ndarray):
    totals = alpha.sum(axis=1)
    a0 = alpha[:, 0]
    ac = alpha[:, 1:]
    mean = ac / totals[:, None] * _exclusive_cumprod(a0 / totals)[:, None]
    second = (
        ac * (1 + ac) / (totals * (1 + totals))[:, None]
        * _exclusive_cumprod(a0 * (1 + a0) / (totals * (1 + totals)))[:, None]
    )
    var = mean * (
        (1 + ac) / (1 + totals)[:, None]
        * _exclusive_cumprod((1 + a0) / (1 + totals))[:, None]
        - mean
    )
    return mean, second, var


def prior_mean(params: SbsParameters, t: int | None = None, c: int | None = None):
    """``E[dF(t, c)]``; the full ``(T, k)`` table when no index is given.

    This is also the predictive probability that a new observation equals
    ``(t, c)``.
    """
    idx = _check_index(params, t, c)
    mean = _moment_tables(params.alpha)[0]
    return mean if idx is None else float(mean[idx])


def prior_second_moment(params: SbsParameters, t: int | None = None, c: int | None = None):
    """``E[dF(t, c)^2]``; the full table when no index is given."""
    idx = _check_index(params, t, c)
    second = _moment_tables(params.alpha)[1]
    return second if idx is None else float(second[idx])


def prior_variance(params: SbsParameters, t: int | None = None, c: int | None = None):
    """``Var[dF(t, c)]`` from the closed form; the full table when no index is given."""
    idx = _check_index(params, t, c)
    var = _moment_tables(params.alpha)[2]
    return var if idx is None else float(var[idx])


def _log_gamma_variates(shape: np.ndarray, size: tuple, rng: np.random.Generator) -> np.ndarray:
    """Logs of independent Gamma(shape, 1) draws, stable for tiny shapes.

    Uses ``Gamma(a) = Gamma(a + 1) * U^(1/a)``; a zero shape yields ``-inf``
    (a point mass at zero).
    """
    shape = np.asarray(shape, dtype=float)
    full = size + shape.shape
    g = rng.standard_gamma(shape + 1.0, size=full)
    u = rng.random(size=full)
    with np.errstate(divide="ignore", over="ignore"):
        return np.log(g) + np.log(u) / shape


def _log_dirichlet(alpha: np.ndarray, size: tuple, rng: np.random.Generator) -> np.ndarray:
    """Log-weights of Dirichlet draws along the last axis of ``alpha``."""
    logg = _log_gamma_variates(alpha, size, rng)
    top = logg.max(axis=-1, keepdims=True)
    dead = ~np.isfinite(top[..., 0])
    if np.any(dead):
        # every component underflowed: the draw is then a vertex of the
        # simplex, chosen with probability proportional to alpha
        a = np.broadcast_to(alpha, logg.shape)[dead]
        cum = np.cumsum(a, axis=-1)
        pick = (rng.random(a.shape[0]) * cum[:, -1])[:, None] < cum
        choice = pick.argmax(axis=-1)
        vertex = np.full(a.shape, -np.inf)
        vertex[np.arange(a.shape[0]), choice] = 0.0
        logg[dead] = vertex
        top = logg.max(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        lse = np.log(np.sum(np.exp(logg - top), axis=-1, keepdims=True)) + top
    return logg - lse


def sample_increments(
    params: SbsParameters, size: int, random_state=None, return_weights: bool = False
):
    """Draw ``size`` independent realisations of the increments ``dF``.

    Returns
    -------
    increments : ndarray of shape (size, T, k)
    weights : ndarray of shape (size, T, k + 1)
        The Dirichlet vectors ``W_t``; only when ``return_weights`` is true.
    """
    rng = check_rng(random_state)
    size = check_positive_int(size, "size")
    logw = _log_dirichlet(params.alpha, (size,), rng)
    log_surv = np.cumsum(logw[..., 0], axis=1)
    log_prev = np.concatenate([np.zeros((size, 1)), log_surv[:, :-1]], axis=1)
    increments = np.exp(logw[..., 1:] + log_prev[..., None])
    if return_weights:
        return increments, np.exp(logw)
    return increments


def sample_sbs(params: SbsParameters, random_state=None) -> SubdistributionFunction:
    """One draw of ``F`` by direct stick-breaking."""
    inc = sample_increments(params, 1, random_state)[0]
    return SubdistributionFunction(_clip_mass(inc), params.grid)


def _clip_mass(inc: np.ndarray) -> np.ndarray:
    # rounding can push the total a hair above one
    total = inc.sum()
    return inc / total if total > 1.0 else inc


def sample_increments_decomposition(params: SbsParameters, size: int, random_state=None):
    """Draw increments through the beta-Stacy decomposition ``dF = V * dG``.

    ``G`` is a discrete beta-Stacy process with
    ``U_t ~ Beta(sum_{d>=1} alpha_{t,d}, alpha_{t,0})`` and, independently,
    ``V_t ~ Dirichlet(alpha_{t,1}, ..., alpha_{t,k})`` splits each event
    probability among the causes (``V_t = 1`` when ``k = 1``).

    Returns
    -------
    increments : ndarray of shape (size, T, k)
    """
    rng = check_rng(random_state)
    size = check_positive_int(size, "size")
    alpha = params.alpha
    event_mass = alpha[:, 1:].sum(axis=1)
    log_x = _log_gamma_variates(event_mass, (size,), rng)
    log_y = _log_gamma_variates(alpha[:, 0], (size,), rng)
    log_norm = np.logaddexp(log_x, log_y)
    log_u = log_x - log_norm
    log_1mu = log_y - log_norm
    log_prev = np.concatenate(
        [np.zeros((size, 1)), np.cumsum(log_1mu, axis=1)[:, :-1]], axis=1
    )
    log_dg = log_u + log_prev
    if params.k == 1:
        log_v = np.zeros((size, params.horizon, 1))
    else:
        log_v = _log_dirichlet(alpha[:, 1:], (size,), rng)
    return np.exp(log_v + log_dg[..., None])


def sample_via_decomposition(params: SbsParameters, random_state=None) -> SubdistributionFunction:
    """One draw of ``F`` through the beta-Stacy decomposition."""
    inc = sample_increments_decomposition(params, 1, random_state)[0]
    return SubdistributionFunction(_clip_mass(inc), params.grid)


def hazards_from_subdistribution(F: SubdistributionFunction) -> CumulativeHazards:
    """Hazard increments ``dA_c(t) = dF(t, c) / S(t - 1)``.

    Bins after all mass is spent get zero hazard.

    Raises
    ------
    ValueError
        If a bin carries mass although ``S(t - 1) = 0``.
    """
    if not F.defined.all():
        raise ValueError("F must be defined on every bin")
    inc = F.increments
    prev = np.clip(F.survival[:-1], 0.0, None)
    spent = prev <= 0
    if np.any(inc[spent] > _MASS_TOL):
        t = int(np.argmax(spent & (inc.sum(axis=1) > _MASS_TOL))) + 1
        raise ValueError(f"inconsistent input: mass at bin {t} after S(t-1) = 0")
    hazards = np.zeros_like(inc)
    ok = ~spent
    hazards[ok] = inc[ok] / prev[ok, None]
    hazards = np.clip(hazards, 0.0, 1.0)
    row = hazards.sum(axis=1)
    over = row > 1.0
    hazards[over] /= row[over, None]
    return CumulativeHazards(hazards, F.grid)


def subdistribution_from_hazards(A: CumulativeHazards) -> SubdistributionFunction:
    """Inverse of :func:`hazards_from_subdistribution`: ``dF = S(t-1) dA``."""
    inc = A.increments
    prev = _exclusive_cumprod(1.0 - inc.sum(axis=1))
    return SubdistributionFunction(prev[:, None] * inc, A.grid)
