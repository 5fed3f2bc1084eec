"""Binned competing-risks samples with covariate profiles."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import check_observations, check_positive_int
from .posterior import CountStatistics, count_statistics
from .process import TimeGrid

__all__ = ["CensoredSample"]


@dataclass(frozen=True, eq=False)
class CensoredSample:
    """Observations ``(t*, d*)`` on a time grid with covariate rows.

    Parameters
    ----------
    times : array-like of int, shape (n,)
        Bin indices in ``1..grid.horizon``.
    causes : array-like of int, shape (n,)
        ``0`` for censored, otherwise the event type in ``1..k``.
    grid : TimeGrid
    k : int
        Number of competing risks.
    X : array-like of shape (n, p), optional
        Covariate rows including the leading intercept column. Defaults to
        an intercept-only design.
    """

    times: np.ndarray
    causes: np.ndarray
    grid: TimeGrid
    k: int
    X: np.ndarray | None = None
    covariate_names: tuple = field(default=())

    def __post_init__(self):
        k = check_positive_int(self.k, "k")
        times, causes = check_observations(self.times, self.causes, k, self.grid.horizon)
        n = times.size
        X = np.ones((n, 1)) if self.X is None else np.array(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] != n:
            raise ValueError(f"X must have shape (n, p) with n = {n}")
        if X.shape[1] < 1 or (n and not np.all(X[:, 0] == 1.0)):
            raise ValueError("the first column of X must be the intercept (all ones)")
        if not np.all(np.isfinite(X)):
            raise ValueError("X must be finite")
        for name, arr in (("times", times), ("causes", causes), ("X", X)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        names = tuple(self.covariate_names) or tuple(
            ["intercept"] + [f"x{j}" for j in range(1, X.shape[1])]
        )
        if len(names) != X.shape[1]:
            raise ValueError("covariate_names must name every column of X")
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @cached_property
    def _profiles(self):
        if self.n == 0:
            return np.empty((0, self.p)), np.empty(0, dtype=np.int64)
        uniq, first, inverse = np.unique(self.X, axis=0, return_index=True, return_inverse=True)
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return uniq[order], rank[inverse.ravel()]

    @property
    def profiles(self) -> np.ndarray:
        """Distinct covariate rows in order of first appearance."""
        return self._profiles[0]

    @property
    def profile_index(self) -> np.ndarray:
        """Profile number of each observation."""
        return self._profiles[1]

    def profile_observations(self, j: int):
        """``(times, causes)`` of profile ``j`` in stored order."""
        sel = self.profile_index == j
        return self.times[sel], self.causes[sel]

    @cached_property
    def profile_stats(self) -> list[CountStatistics]:
        return [
            count_statistics(self.profile_observations(j), self.grid.horizon, self.k)
            for j in range(len(self.profiles))
        ]

    def match_profile(self, w) -> int | None:
        """Index of the observed profile equal to ``w``, or None."""
        w = np.asarray(w, dtype=float)
        hits = np.flatnonzero(np.all(self.profiles == w, axis=1))
        return int(hits[0]) if hits.size else None

    def stats(self) -> CountStatistics:
        return count_statistics((self.times, self.causes), self.grid.horizon, self.k)

    def subset(self, mask) -> CensoredSample:
        mask = np.asarray(mask)
        return CensoredSample(
            self.times[mask], self.causes[mask], self.grid, self.k, self.X[mask],
            self.covariate_names,
        )
