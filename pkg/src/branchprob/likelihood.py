"""Observed-data log-likelihood for discretely monitored processes.

A panel observation is a sequence of states at increasing times; by the
Markov property the log-likelihood is the sum of log transition
probabilities over consecutive pairs, each computable by any back end that
yields a transition law grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

State = tuple[int, int]
# backend(t, origin) -> 2-d array of transition probabilities from origin
GridBackend = Callable[[float, State], np.ndarray]


@dataclass(frozen=True)
class ObservationSeries:
    """States of one process observed at increasing times."""

    times: tuple[float, ...]
    states: tuple[State, ...]

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) < 2:
            raise ValueError("need at least two observations")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        for x1, x2 in self.states:
            if x1 < 0 or x2 < 0:
                raise ValueError(f"states must be non-negative, got "
                                 f"({x1}, {x2})")

    @property
    def intervals(self):
        """(dt, origin, target) triples for consecutive observations."""
        return [(t1 - t0, s0, s1) for (t0, t1, s0, s1) in
                zip(self.times, self.times[1:], self.states, self.states[1:])]


@dataclass(frozen=True)
class IntervalLikelihood:
    dt: float
    origin: State
    target: State
    probability: float
    log_probability: float


def observed_log_likelihood(series: ObservationSeries, backend: GridBackend,
                            ) -> tuple[float, list[IntervalLikelihood]]:
    """Sum of log transition probabilities over the observation intervals.

    Returns (total, per-interval breakdown). A non-positive probability
    (target outside the computed window, or numerically zero) makes the
    total -inf; the offending intervals are flagged in the breakdown rather
    than raising, since boundary-hugging panels are a modelling problem,
    not a programming one.
    """
    parts = []
    total = 0.0
    for dt, origin, target in series.intervals:
        grid = np.asarray(backend(dt, origin))
        l, m = target
        p = float(grid[l, m]) if (l < grid.shape[0] and m < grid.shape[1]) else 0.0
        logp = math.log(p) if p > 0.0 else -math.inf
        parts.append(IntervalLikelihood(dt=dt, origin=origin, target=target,
                                        probability=p, log_probability=logp))
        total += logp
    return total, parts
