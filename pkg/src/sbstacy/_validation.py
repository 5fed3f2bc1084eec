"""Input validation helpers shared by the estimators and module functions."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_rng(random_state=None) -> np.random.Generator:
    """Turn ``random_state`` into a :class:`numpy.random.Generator`.

    Accepts ``None``, an integer seed, a :class:`numpy.random.SeedSequence`
    or an existing generator (returned unchanged, so that callers share the
    stream).
    """
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(
        random_state, (numbers.Integral, np.random.SeedSequence)
    ):
        return np.random.default_rng(random_state)
    raise TypeError(
        f"random_state must be None, an int, a SeedSequence or a Generator, "
        f"got {type(random_state).__name__}"
    )


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_observations(times, causes, k: int, horizon: int | None = None):
    """Validate binned competing-risks observations.

    Parameters
    ----------
    times : array-like of int, shape (n,)
        Bin indices ``t* >= 1``.
    causes : array-like of int, shape (n,)
        Event types in ``0..k``; ``0`` means right-censored.
    k : int
        Number of competing risks.
    horizon : int, optional
        Largest admissible bin index.

    Returns
    -------
    times, causes : ndarray of int
    """
    times = np.asarray(times)
    causes = np.asarray(causes)
    if times.ndim != 1 or causes.ndim != 1 or times.shape != causes.shape:
        raise ValueError("times and causes must be 1-d arrays of equal length")
    for name, arr in (("times", times), ("causes", causes)):
        if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError(f"{name} must hold integers")
    times = times.astype(np.int64)
    causes = causes.astype(np.int64)
    if times.size and times.min() < 1:
        bad = int(np.argmax(times < 1))
        raise ValueError(
            f"observation {bad}: time bin must be >= 1, got {times[bad]}"
        )
    if horizon is not None and times.size and times.max() > horizon:
        bad = int(np.argmax(times > horizon))
        raise ValueError(
            f"observation {bad}: time bin {times[bad]} exceeds horizon {horizon}"
        )
    if causes.size and (causes.min() < 0 or causes.max() > k):
        bad = int(np.argmax((causes < 0) | (causes > k)))
        raise ValueError(
            f"observation {bad}: cause must be in 0..{k}, got {causes[bad]}"
        )
    return times, causes


def check_survival_y(y, k: int | None = None):
    """Split a two-column target ``y = [time, status]`` for the estimators.

    Structured arrays with ``time``/``status`` fields are accepted as well.
    """
    if isinstance(y, np.ndarray) and y.dtype.names is not None:
        names = y.dtype.names
        if "time" not in names or "status" not in names:
            raise ValueError("structured y needs 'time' and 'status' fields")
        time = np.asarray(y["time"], dtype=float)
        status = np.asarray(y["status"])
    else:
        y = check_array(y, ensure_2d=True, dtype="numeric")
        if y.shape[1] != 2:
            raise ValueError(f"y must have two columns (time, status), got {y.shape[1]}")
        time, status = y[:, 0].astype(float), y[:, 1]
    if np.any(time <= 0):
        raise ValueError("event times must be strictly positive")
    if not np.all(np.equal(np.mod(status, 1), 0)) or np.any(status < 0):
        raise ValueError("status must hold non-negative integers")
    status = status.astype(np.int64)
    if k is not None and status.size and status.max() > k:
        raise ValueError(f"status values must be in 0..{k}")
    return time, status


def check_covariates(X, n_samples: int | None = None) -> np.ndarray:
    """Validate a covariate matrix (without intercept column)."""
    X = check_array(X, ensure_2d=True, dtype=np.float64, ensure_min_features=0)
    if n_samples is not None and X.shape[0] != n_samples:
        raise ValueError(
            f"X has {X.shape[0]} rows but y has {n_samples} observations"
        )
    return X
