"""Reinforced urn process that predictively generates SBS-distributed data.

States are pairs ``(t, d)``. From ``(t, 0)`` a ball is drawn from that
state's urn; its colour ``c`` moves the walk to ``(t + 1, c)``. Any state
``(t, d)`` with ``d != 0`` returns to ``(0, 0)``, which closes one patient
block with event time ``t`` and type ``d``. Every drawn colour is put back
with ``m`` extra balls of the same colour.

The urn at ``(t, 0)`` starts with masses ``alpha_{t+1, 0..k}``, so urn index
``t`` and parameter row ``t`` (0-based) coincide.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._validation import check_rng
from .process import SbsParameters

__all__ = [
    "PatientBlock",
    "TraceRecord",
    "HorizonExceededError",
    "UrnSystem",
    "sequence_probability",
    "path_probability",
    "scaled_reinforcement_equivalence",
    "write_trace",
]


class HorizonExceededError(RuntimeError):
    """A walk ran past the last modelled bin without an event."""


@dataclass(frozen=True)
class PatientBlock:
    """Event time ``time >= 1`` and event type ``cause`` in ``1..k`` of one block."""

    time: int
    cause: int


@dataclass(frozen=True)
class TraceRecord:
    """One extraction: urn ``(time, 0)``, drawn colour, composition before the draw."""

    block: int
    time: int
    color: int
    composition: tuple


class UrnSystem:
    """Stateful reinforced urn system.

    Parameters
    ----------
    params : SbsParameters
        Initial urn compositions, ``n_(t,0)(c) = alpha_{t+1,c}``.
    m : float, default=1.0
        Reinforcement mass added after each extraction. ``m = 0`` disables
        learning (draws are then i.i.d. from the prior predictive).

    Notes
    -----
    Urns are created on first visit. Instances are not thread-safe; run
    independent replicas with their own generators instead.
    """

    def __init__(self, params: SbsParameters, m: float = 1.0):
        if not m >= 0 or not np.isfinite(m):
            raise ValueError(f"reinforcement mass must be finite and >= 0, got {m}")
        self.params = params
        self.m = float(m)
        self._counts: dict[int, np.ndarray] = {}
        self.n_blocks = 0

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def horizon(self) -> int:
        return self.params.horizon

    def composition(self, t: int) -> np.ndarray:
        """Current ball masses of urn ``(t, 0)`` (a copy)."""
        return self._urn(t).copy()

    def _urn(self, t: int) -> np.ndarray:
        if not 0 <= t < self.horizon:
            raise HorizonExceededError(
                f"urn ({t}, 0) lies beyond the horizon of {self.horizon} bins"
            )
        urn = self._counts.get(t)
        if urn is None:
            urn = self.params.alpha[t].copy()
            self._counts[t] = urn
        return urn

    def visited(self) -> list[int]:
        return sorted(self._counts)

    def copy(self) -> UrnSystem:
        other = UrnSystem(self.params, self.m)
        other._counts = {t: v.copy() for t, v in self._counts.items()}
        other.n_blocks = self.n_blocks
        return other

    def extract(self, t: int, rng: np.random.Generator) -> int:
        """Draw a colour from urn ``(t, 0)`` and reinforce it."""
        urn = self._urn(t)
        u = rng.random() * urn.sum()
        color = int(np.searchsorted(np.cumsum(urn), u, side="right"))
        color = min(color, len(urn) - 1)
        while urn[color] == 0:  # u landed exactly on a zero-width boundary
            color -= 1
        urn[color] += self.m
        return color

    def draw_block(self, random_state=None, trace: list | None = None) -> PatientBlock:
        """Walk from ``(0, 0)`` until an event colour is drawn.

        Raises
        ------
        HorizonExceededError
            If the walk survives the last bin. Reinforcements made along the
            failed walk are kept.
        """
        rng = check_rng(random_state)
        t = 0
        while True:
            if trace is not None:
                before = tuple(self._urn(t).tolist())
            color = self.extract(t, rng)
            if trace is not None:
                trace.append(TraceRecord(self.n_blocks + 1, t, color, before))
            if color != 0:
                self.n_blocks += 1
                return PatientBlock(t + 1, color)
            t += 1
            if t >= self.horizon:
                raise HorizonExceededError(
                    f"walk survived all {self.horizon} bins; the parameters do not "
                    "put enough mass on the horizon (check validate_recurrency)"
                )

    def draw_blocks(self, n: int, random_state=None, trace: list | None = None) -> list[PatientBlock]:
        rng = check_rng(random_state)
        return [self.draw_block(rng, trace) for _ in range(n)]

    def observe(self, block: PatientBlock) -> None:
        """Reinforce the path of an observed block without drawing."""
        self._check_block(block)
        for u in range(block.time - 1):
            self._urn(u)[0] += self.m
        self._urn(block.time - 1)[block.cause] += self.m
        self.n_blocks += 1

    def observe_censored(self, time: int) -> None:
        """Reinforce the survival colour of urns ``(0, 0) .. (time - 1, 0)``."""
        if not 1 <= time <= self.horizon:
            raise HorizonExceededError(f"censoring bin {time} outside 1..{self.horizon}")
        for u in range(time):
            self._urn(u)[0] += self.m

    def next_block_law(self) -> np.ndarray:
        """Probability table ``(T, k)`` of the next block given the current urns."""
        T = self.horizon
        probs = np.empty((T, self.k))
        survive = 1.0
        for t in range(T):
            urn = self._counts.get(t, self.params.alpha[t])
            total = urn.sum()
            probs[t] = survive * urn[1:] / total
            survive *= urn[0] / total
        return probs

    def _check_block(self, block: PatientBlock) -> None:
        if not 1 <= block.time <= self.horizon:
            raise HorizonExceededError(
                f"block time {block.time} outside 1..{self.horizon}"
            )
        if not 1 <= block.cause <= self.k:
            raise ValueError(f"block cause {block.cause} outside 1..{self.k}")


def sequence_probability(urn: UrnSystem, blocks) -> float:
    """Exact probability that the urn generates ``blocks`` in the given order.

    Multiplies the successive draw probabilities, reinforcing after each
    draw. The input urn is not modified.
    """
    work = urn.copy()
    prob = 1.0
    for block in blocks:
        block = block if isinstance(block, PatientBlock) else PatientBlock(*block)
        work._check_block(block)
        for u in range(block.time - 1):
            a = work._urn(u)
            prob *= a[0] / a.sum()
        a = work._urn(block.time - 1)
        prob *= a[block.cause] / a.sum()
        work.observe(block)
    return prob


def path_probability(urn: UrnSystem, states) -> float:
    """Probability of a full state path starting at ``(0, 0)``.

    ``states`` is a sequence of ``(t, d)`` pairs. Moves out of an event
    state ``(t, d)``, ``d != 0``, are certain returns to ``(0, 0)``.
    """
    states = [tuple(s) for s in states]
    if not states or states[0] != (0, 0):
        raise ValueError("paths must start at (0, 0)")
    work = urn.copy()
    prob = 1.0
    for (t, d), (t_next, d_next) in zip(states[:-1], states[1:]):
        if d != 0:
            if (t_next, d_next) != (0, 0):
                return 0.0
            continue
        if t_next != t + 1:
            return 0.0
        a = work._urn(t)
        prob *= a[d_next] / a.sum()
        a[d_next] += work.m
    return prob


def scaled_reinforcement_equivalence(params: SbsParameters, m: float) -> SbsParameters:
    """SBS parameters ``alpha / m`` of the process generated with reinforcement ``m``."""
    if not m > 0:
        raise ValueError(f"reinforcement mass must be positive, got {m}")
    return params.scaled(1.0 / m)


def write_trace(records, file=None, delimiter: str = ",") -> str:
    """Write draw records as delimited text; returns the text when ``file`` is None."""
    out = io.StringIO() if file is None else file
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    k1 = len(records[0].composition) if records else 0
    writer.writerow(["block", "state_time", "color"] + [f"n_{c}" for c in range(k1)])
    for r in records:
        writer.writerow([r.block, r.time, r.color] + [repr(float(x)) for x in r.composition])
    return out.getvalue() if file is None else ""
