"""Independent ground truth: matrix exponential and Monte Carlo oracles.

Neither path touches generating functions, so both serve as cross-checks on
the Fourier-inversion pipeline.

The uniformization oracle truncates the population lattice to [0, cap]^2,
adds an absorbing sink for transitions that leave the window, and evaluates
the row of e^{Qt} for one initial state as the Poisson-weighted power series

    e^{Qt} = sum_k  Pois(k; Lambda t) P^k,   P = I + Q / Lambda,

with Lambda the largest exit rate; the series is truncated once the Poisson
tail drops below 1e-12.

The simulation oracle draws exact trajectories (exponential waiting times,
categorical event choice) for all replicates in lockstep-vectorised sweeps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from .errors import TruncationWarning
from .models import TwoTypeRates

_POISSON_TAIL = 1e-12
_EXPLOSION_LIMIT = 1_000_000


@dataclass(frozen=True)
class TruncatedGenerator:
    """Generator matrix of the truncated process, with absorbing sink.

    States (x1, x2) in [0, cap]^2 are flattened row-major; index
    (cap+1)^2 is the sink that absorbs all transitions leaving the window.
    """

    rates: TwoTypeRates
    cap: int
    Q: sparse.csr_matrix

    @property
    def dim(self) -> int:
        return (self.cap + 1) ** 2 + 1

    def state_index(self, x1: int, x2: int) -> int:
        if not (0 <= x1 <= self.cap and 0 <= x2 <= self.cap):
            raise ValueError(f"state ({x1}, {x2}) outside [0, {self.cap}]^2")
        return x1 * (self.cap + 1) + x2


@dataclass(frozen=True)
class TransitionDistribution:
    """One row of e^{Qt}: the law of X(t) given X(0), on the window."""

    grid: np.ndarray          # (cap+1, cap+1), grid[l, m] = P(X(t) = (l, m))
    sink_mass: float
    cap: int
    t: float
    origin: tuple[int, int]


def build_generator(rates: TwoTypeRates, cap: int) -> TruncatedGenerator:
    """Assemble the truncated generator as a sparse CSR matrix."""
    if cap < 0:
        raise ValueError(f"cap must be >= 0, got {cap}")
    side = cap + 1
    dim = side * side + 1
    sink = dim - 1
    events = ([(1, k, l, a) for k, l, a in rates.events(1)]
              + [(2, k, l, a) for k, l, a in rates.events(2)])

    rows, cols, vals = [], [], []
    x1 = np.repeat(np.arange(side), side)
    x2 = np.tile(np.arange(side), side)
    src = x1 * side + x2
    exit_rate = np.zeros(side * side)
    for ptype, k, l, a in events:
        count = x1 if ptype == 1 else x2
        rate = a * count
        active = rate > 0
        if ptype == 1:
            t1, t2 = x1 - 1 + k, x2 + l
        else:
            t1, t2 = x1 + k, x2 - 1 + l
        inside = active & (t1 <= cap) & (t2 <= cap)
        outside = active & ~inside
        rows.append(src[inside])
        cols.append((t1 * side + t2)[inside])
        vals.append(rate[inside])
        if outside.any():
            rows.append(src[outside])
            cols.append(np.full(outside.sum(), sink))
            vals.append(rate[outside])
        exit_rate += rate
    rows.append(src)
    cols.append(src)
    vals.append(-exit_rate)

    Q = sparse.csr_matrix(
        (np.concatenate(vals),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim))
    return TruncatedGenerator(rates=rates, cap=cap, Q=Q)


def transition_row(gen: TruncatedGenerator, t: float, init: tuple[int, int],
                   *, sink_bound: float = 1e-8) -> TransitionDistribution:
    """Distribution of X(t) from one initial state, by uniformization.

    Warns with TruncationWarning when the sink absorbs more than sink_bound
    of the mass (the cap is too small for this horizon).
    """
    if t < 0 or not np.isfinite(t):
        raise ValueError(f"t must be finite and >= 0, got {t}")
    side = gen.cap + 1
    start = gen.state_index(*init)

    v = np.zeros(gen.dim)
    v[start] = 1.0
    lam = float(-gen.Q.diagonal().min())
    if t == 0.0 or lam == 0.0:
        result = v
    else:
        result = _uniformized(gen.Q, v, t, lam)

    sink_mass = float(result[-1])
    grid = result[:-1].reshape(side, side).copy()
    if sink_mass > sink_bound:
        warnings.warn(TruncationWarning(
            f"truncation at cap {gen.cap} absorbed {sink_mass:.3e} "
            f"of the mass (bound {sink_bound:.1e})", sink_mass=sink_mass))
    return TransitionDistribution(grid=grid, sink_mass=sink_mass,
                                  cap=gen.cap, t=t, origin=tuple(init))


def _uniformized(Q: sparse.csr_matrix, v: np.ndarray, t: float,
                 lam: float) -> np.ndarray:
    mean = lam * t
    if mean > 680.0:
        raise ValueError(
            f"uniformization rate * time = {mean:.1f} too large for "
            "linear-space Poisson weights; reduce cap or split the interval")
    P = sparse.eye(Q.shape[0], format="csr") + Q / lam
    weight = math.exp(-mean)
    acc = weight * v
    consumed = weight
    term = v
    k = 0
    max_terms = int(mean + 12.0 * math.sqrt(mean + 1.0) + 60.0)
    while consumed < 1.0 - _POISSON_TAIL and k < max_terms:
        k += 1
        term = term @ P
        weight *= mean / k
        acc += weight * term
        consumed += weight
    return acc


def simulate(rates: TwoTypeRates, init: tuple[int, int], t: float, reps: int,
             seed: Optional[int] = None) -> "SimulationResult":
    """Direct stochastic simulation of end states at horizon t.

    All replicates advance together: each sweep draws one waiting time and
    one event per still-active replicate. Returns empirical end-state counts.
    """
    if t < 0 or not np.isfinite(t):
        raise ValueError(f"t must be finite and >= 0, got {t}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if init[0] < 0 or init[1] < 0:
        raise ValueError(f"initial state must be non-negative, got {init}")
    events = ([(1, k, l, a) for k, l, a in rates.events(1)]
              + [(2, k, l, a) for k, l, a in rates.events(2)])
    rng = np.random.default_rng(seed)

    x1 = np.full(reps, init[0], dtype=np.int64)
    x2 = np.full(reps, init[1], dtype=np.int64)
    active = np.ones(reps, dtype=bool)
    clock = np.zeros(reps)
    exploded = np.zeros(reps, dtype=bool)

    if t > 0 and events:
        while True:
            live = np.flatnonzero(active)
            if live.size == 0:
                break
            lx1, lx2 = x1[live], x2[live]
            rate_cols = [a * (lx1 if ptype == 1 else lx2)
                         for (ptype, _, _, a) in events]
            rate_mat = np.stack(rate_cols, axis=1)
            total = rate_mat.sum(axis=1)
            silent = total <= 0.0
            if silent.any():
                active[live[silent]] = False
                keep = ~silent
                live, rate_mat, total = live[keep], rate_mat[keep], total[keep]
                if live.size == 0:
                    break
            wait = rng.exponential(1.0, size=live.size) / total
            clock[live] += wait
            past = clock[live] > t
            if past.any():
                active[live[past]] = False
                keep = ~past
                live, rate_mat, total = live[keep], rate_mat[keep], total[keep]
                if live.size == 0:
                    break
            pick = rng.random(live.size) * total
            choice = (rate_mat.cumsum(axis=1) < pick[:, None]).sum(axis=1)
            choice = np.minimum(choice, len(events) - 1)
            for e_i, (ptype, k, l, _) in enumerate(events):
                sel = live[choice == e_i]
                if sel.size == 0:
                    continue
                if ptype == 1:
                    x1[sel] += k - 1
                    x2[sel] += l
                else:
                    x1[sel] += k
                    x2[sel] += l - 1
            boom = (x1[live] + x2[live]) > _EXPLOSION_LIMIT
            if boom.any():
                exploded[live[boom]] = True
                active[live[boom]] = False

    counts: dict[tuple[int, int], int] = {}
    ok = ~exploded
    for a, b in zip(x1[ok], x2[ok]):
        key = (int(a), int(b))
        counts[key] = counts.get(key, 0) + 1
    return SimulationResult(counts=counts, reps=reps,
                            exploded=int(exploded.sum()), t=t,
                            origin=(int(init[0]), int(init[1])), seed=seed)


@dataclass(frozen=True)
class SimulationResult:
    """Empirical end-state frequencies from direct simulation."""

    counts: dict[tuple[int, int], int]
    reps: int
    exploded: int
    t: float
    origin: tuple[int, int]
    seed: Optional[int]

    def frequency(self, state: tuple[int, int]) -> float:
        return self.counts.get(tuple(state), 0) / self.reps

    def grid(self, size: int) -> np.ndarray:
        """Empirical probabilities on [0, size)^2 (mass outside is dropped)."""
        g = np.zeros((size, size))
        for (a, b), c in self.counts.items():
            if 0 <= a < size and 0 <= b < size:
                g[a, b] = c / self.reps
        return g
