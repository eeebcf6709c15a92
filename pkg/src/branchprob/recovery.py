"""Sparse recovery of transition-probability grids from partial PGF data.

When the transition law S is sparse on the n x n lattice, it can be
recovered from the generating function sampled at a random m x m sub-grid of
torus points instead of all n^2 of them. With A the m selected rows of the
synthesis basis psi (psi[j][k] = e^{2 pi i j k / n}), the measurements are

    B = A S A^T,   B[a][b] = phi(t, e^{2 pi i idx_a / n}, e^{2 pi i idx_b / n}),

and S is estimated by l1-penalised least squares

    minimise_S  g(S) + lambda * ||S||_1,
    g(S) = 0.5 * || A S A^T - B ||_F^2,

solved with accelerated proximal gradient descent: momentum extrapolation
Y_{k+1} = S_k + omega_k (S_k - S_{k-1}) with omega_k = k/(k+3), a gradient
step of backtracked size L, and entrywise soft-thresholding at L*lambda.

Since the spike and Fourier bases are maximally incoherent, the index set is
drawn uniformly at random; no structure is imposed on it. Iterates are kept
real: the gradient of the real-restricted objective is the real part of
-A^H (B - A S A^T) conj(A) (the matrix itself carries a genuine imaginary
part whenever the index set is not closed under u -> n-u, and discarding it
is exact, not an approximation).

All operator applications go through the FFT: A S A^T is the idx x idx
sub-grid of the series transform of S, and the adjoint embeds the m x m
residual into an n x n zero grid and applies the inverse-kernel transform.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fourier
from .errors import DivergenceError, StepUnderflowError
from .inversion import ProbabilityGrid
from .models import ModelSpec, pgf_eval_batch

_MAX_SHRINKS = 60


@dataclass(frozen=True)
class IndexSet:
    """Sorted distinct torus frequencies sampled for measurement."""

    n: int
    indices: tuple[int, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        idx = self.indices
        if len(idx) == 0 or len(idx) > self.n:
            raise ValueError(f"need 1 <= m <= n = {self.n}, got m = {len(idx)}")
        if any(i < 0 or i >= self.n for i in idx):
            raise ValueError(f"indices must lie in [0, {self.n})")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class MeasurementSet:
    """Partial generating-function measurements B = A S A^T.

    A holds the sampled basis rows; B the PGF values at the m x m sampled
    sub-grid. ode_solves and elapsed record what building B cost.
    """

    idx: IndexSet
    A: np.ndarray
    B: np.ndarray
    n: int
    t: float = 0.0
    origin: tuple[int, int] = (0, 0)
    ode_solves: int = 0
    elapsed: float = 0.0


@dataclass
class RecoveryConfig:
    """Solver knobs for the penalised recovery.

    lam is the l1 weight; step_init the first trial step of the backtracking
    line search (deliberately small), shrink its contraction factor. With
    warm_start, each iteration begins the search at the previous accepted
    step grown by 1/shrink (capped); without it, at step_init every time.
    prox_at_momentum selects the proximal anchor: the momentum point
    (standard accelerated PGD, default) or the previous iterate.
    """

    lam: float
    step_init: float = 5e-6
    shrink: float = 0.5
    step_cap: float = 1.0
    warm_start: bool = True
    prox_at_momentum: bool = True
    max_iters: int = 5000
    stop_tol: float = 1e-8

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.step_init <= 0 or self.step_cap <= 0:
            raise ValueError("steps must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol <= 0:
            raise ValueError("stop_tol must be positive")


@dataclass
class RecoveryResult:
    """Recovered grid plus solver diagnostics."""

    grid: ProbabilityGrid
    objective_trace: np.ndarray
    iterations: int
    ode_solves: int
    measure_time: float
    solve_time: float
    eps_max: Optional[float] = None
    eps_rel: Optional[float] = None

    @property
    def recovered_sum(self) -> float:
        return self.grid.sum()


def sample_measurements(model: ModelSpec, t: float, j: int, k: int, n: int,
                        m: int, seed: Optional[int] = None, *,
                        abs_tol: float = 1e-10, rel_tol: float = 1e-8,
                        ) -> MeasurementSet:
    """Draw m torus frequencies uniformly and measure the PGF on their grid."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m = {m}, n = {n}")
    rng = np.random.default_rng(seed)
    indices = np.sort(rng.choice(n, size=m, replace=False))
    idx = IndexSet(n=n, indices=tuple(int(i) for i in indices), seed=seed)

    start = time.perf_counter()
    iu, iv = np.meshgrid(indices, indices, indexing="ij")
    s1 = np.exp(2j * np.pi * iu.ravel() / n)
    s2 = np.exp(2j * np.pi * iv.ravel() / n)
    values, solves = pgf_eval_batch(model, t, j, k, s1, s2,
                                    abs_tol=abs_tol, rel_tol=rel_tol)
    B = values.reshape(m, m)
    A = fourier.basis_rows(n, indices)
    return MeasurementSet(idx=idx, A=A, B=B, n=n, t=t, origin=(j, k),
                          ode_solves=solves,
                          elapsed=time.perf_counter() - start)


def soft_threshold(x: np.ndarray, alpha: float) -> np.ndarray:
    """Entrywise sign(x) * max(|x| - alpha, 0)."""
    if alpha < 0:
        raise ValueError("threshold must be >= 0")
    x = np.asarray(x)
    return np.sign(x) * np.maximum(np.abs(x) - alpha, 0.0)


def _measure(S: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """A S A^T as the idx x idx sub-grid of the series transform of S."""
    return fourier.series_transform(S)[np.ix_(idx, idx)]


def objective(S: np.ndarray, ms: MeasurementSet, lam: float) -> float:
    """g(S) + lam * ||S||_1 with g the squared Frobenius data misfit."""
    return _smooth(S, ms) + lam * float(np.abs(S).sum())


def _smooth(S: np.ndarray, ms: MeasurementSet) -> float:
    R = _measure(S, np.asarray(ms.idx.indices)) - ms.B
    return 0.5 * float(np.sum(R.real ** 2 + R.imag ** 2))


def gradient(S: np.ndarray, ms: MeasurementSet) -> np.ndarray:
    """Gradient of the data misfit at real S: Re[-A^H (B - A S A^T) conj(A)].

    Evaluated by embedding the m x m residual in an n x n zero grid and
    applying the e^{-} kernel transform; identical to the triple product.
    """
    idx = np.asarray(ms.idx.indices)
    R = ms.B - _measure(S, idx)
    padded = np.zeros((ms.n, ms.n), dtype=complex)
    padded[np.ix_(idx, idx)] = R
    return -np.fft.fft2(padded).real


def line_search(step: float, shrink: float, Y: np.ndarray,
                grad_Y: np.ndarray, ms: MeasurementSet, lam: float,
                ) -> tuple[float, np.ndarray, float]:
    """Backtrack the step until the thresholded move is majorised.

    Tries step, step*shrink, step*shrink^2, ... and accepts the first L
    whose candidate Z = soft_threshold(Y - L * grad_Y, L * lam) satisfies
    the descent bound

        g(Z) <= g(Y) + <grad_Y, Z - Y> + ||Z - Y||_F^2 / (2 L).

    Returns (L, Z, g(Z)). Raises StepUnderflowError after 60 shrinks.
    """
    g_Y = _smooth(Y, ms)
    L = step
    for shrinks in range(_MAX_SHRINKS + 1):
        Z = soft_threshold(Y - L * grad_Y, L * lam)
        D = Z - Y
        g_Z = _smooth(Z, ms)
        bound = g_Y + float(np.sum(grad_Y * D)) + float(np.sum(D * D)) / (2 * L)
        if g_Z <= bound + 1e-15 * max(1.0, abs(bound)):
            return L, Z, g_Z
        L *= shrink
    raise StepUnderflowError(
        f"line search failed to find an acceptable step above "
        f"{L:.3e} after {_MAX_SHRINKS} shrinks", step=L,
        shrink_count=_MAX_SHRINKS)


def recover(ms: MeasurementSet, config: RecoveryConfig) -> RecoveryResult:
    """Accelerated proximal gradient descent from the zero grid."""
    n = ms.n
    start = time.perf_counter()
    S_prev = np.zeros((n, n))
    S = np.zeros((n, n))
    trace = [objective(S, ms, config.lam)]
    step = config.step_init

    iterations = 0
    for k in range(1, config.max_iters + 1):
        omega = k / (k + 3.0)
        Y = S + omega * (S - S_prev)
        grad_Y = gradient(Y, ms)
        L, Z, g_Z = line_search(step, config.shrink, Y, grad_Y, ms, config.lam)
        if config.prox_at_momentum:
            S_next = Z
            obj = g_Z + config.lam * float(np.abs(Z).sum())
        else:
            S_next = soft_threshold(S - L * grad_Y, L * config.lam)
            obj = objective(S_next, ms, config.lam)
        if not math.isfinite(obj):
            raise DivergenceError(
                f"objective became non-finite at iteration {k}")
        S_prev, S = S, S_next
        trace.append(obj)
        iterations = k
        step = (min(L / config.shrink, config.step_cap) if config.warm_start
                else config.step_init)
        rel_change = abs(trace[-1] - trace[-2]) / max(trace[-2], 1e-12)
        if rel_change < config.stop_tol:
            break

    grid = ProbabilityGrid(values=S, n=n, t=ms.t, origin=ms.origin)
    return RecoveryResult(grid=grid, objective_trace=np.asarray(trace),
                          iterations=iterations, ode_solves=ms.ode_solves,
                          measure_time=ms.elapsed,
                          solve_time=time.perf_counter() - start)


def default_lambda(model_name: str, m: int) -> float:
    """Published penalty rules: sqrt(log m) for hsc, log m for bds."""
    if m < 2:
        raise ValueError("m must be >= 2 for the default penalty rules")
    return math.sqrt(math.log(m)) if model_name == "hsc" else math.log(m)


def m_from_sparsity(sparsity: int, n: int) -> int:
    """Measurement rule m = ceil(sqrt(3 K log n^2)) for K-sparse grids."""
    if sparsity < 1 or n < 2:
        raise ValueError("need sparsity >= 1 and n >= 2")
    return min(n, math.ceil(math.sqrt(3.0 * sparsity * math.log(float(n) ** 2))))


def recover_transition_grid(model: ModelSpec, t: float, j: int, k: int,
                            n: int, m: int, config: RecoveryConfig,
                            seed: Optional[int] = None, *,
                            abs_tol: float = 1e-10, rel_tol: float = 1e-8,
                            ) -> RecoveryResult:
    """Measure the PGF at a random m x m sub-grid and recover the law."""
    ms = sample_measurements(model, t, j, k, n, m, seed=seed,
                             abs_tol=abs_tol, rel_tol=rel_tol)
    return recover(ms, config)
