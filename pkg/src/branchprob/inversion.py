"""Transition probabilities by Fourier inversion of the generating function.

Evaluating phi_{jk}(t, e^{2 pi i u/n}, e^{2 pi i v/n}) on the full n x n
torus grid and applying the inverse series transform yields the Riemann-sum
approximation

    p_{(j,k),(l,m)}(t) ~= (1/n^2) sum_{u,v} B[u][v] e^{-2 pi i (l u + m v)/n},

which is exact up to aliasing: mass at populations >= n folds back onto the
grid, so n must dominate the support of the transition law.

Because the transition probabilities are real, the grid satisfies
B[n-u][n-v] = conj(B[u][v]) and only half the points need an ODE solve; the
shortcut is on by default and can be disabled to reproduce flat n^2 counts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import fourier
from .errors import IntegrationError, NumericalInconsistencyError
from .models import ModelSpec, pgf_eval_batch

# cap each batched integration to bound transient memory (7 stage arrays)
_BATCH_LIMIT = 1 << 20


@dataclass(frozen=True)
class PgfGrid:
    """Generating-function values on the uniform torus grid.

    values[u][v] = phi_{jk}(t, e^{2 pi i u/n}, e^{2 pi i v/n}).
    """

    values: np.ndarray
    n: int
    t: float
    origin: tuple[int, int]
    ode_solves: int
    elapsed: float


@dataclass(frozen=True)
class ProbabilityGrid:
    """Transition probabilities from ``origin`` over {0..n-1}^2 at time t."""

    values: np.ndarray
    n: int
    t: float
    origin: tuple[int, int]

    def sum(self) -> float:
        return float(self.values.sum())


def full_pgf_grid(model: ModelSpec, t: float, j: int, k: int, n: int, *,
                  use_symmetry: bool = True, abs_tol: float = 1e-10,
                  rel_tol: float = 1e-8) -> PgfGrid:
    """Evaluate the generating function on the full n x n torus grid.

    With use_symmetry, conjugate pairs (u, v) <-> (n-u, n-v) are evaluated
    once and mirrored, roughly halving the ODE work; the assembled grid is
    identical either way up to integrator roundoff.
    """
    if n < 1:
        raise ValueError(f"grid order must be >= 1, got {n}")
    start = time.perf_counter()
    uu, vv = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    u_flat, v_flat = uu.ravel(), vv.ravel()

    if use_symmetry:
        pu, pv = (n - u_flat) % n, (n - v_flat) % n
        keep = (u_flat < pu) | ((u_flat == pu) & (v_flat <= pv))
        u_eval, v_eval = u_flat[keep], v_flat[keep]
    else:
        u_eval, v_eval = u_flat, v_flat

    values_eval, solves = _eval_points(model, t, j, k, n, u_eval, v_eval,
                                       abs_tol=abs_tol, rel_tol=rel_tol)
    grid = np.empty((n, n), dtype=complex)
    grid[u_eval, v_eval] = values_eval
    if use_symmetry:
        pu, pv = (n - u_eval) % n, (n - v_eval) % n
        grid[pu, pv] = np.conj(values_eval)

    return PgfGrid(values=grid, n=n, t=t, origin=(j, k), ode_solves=solves,
                   elapsed=time.perf_counter() - start)


def _eval_points(model, t, j, k, n, u, v, *, abs_tol, rel_tol):
    """Batched PGF evaluation at grid points, chunked to bound memory."""
    s1 = np.exp(2j * np.pi * u / n)
    s2 = np.exp(2j * np.pi * v / n)
    values = np.empty(u.size, dtype=complex)
    solves = 0
    for lo in range(0, u.size, _BATCH_LIMIT):
        hi = min(lo + _BATCH_LIMIT, u.size)
        try:
            values[lo:hi], batch_solves = pgf_eval_batch(
                model, t, j, k, s1[lo:hi], s2[lo:hi],
                abs_tol=abs_tol, rel_tol=rel_tol)
        except IntegrationError as err:
            if err.component is not None:
                point = lo + (err.component % (hi - lo))
                raise IntegrationError(
                    f"{err} at grid point (u, v) = "
                    f"({u[point]}, {v[point]})",
                    t_reached=err.t_reached, component=err.component) from err
            raise
        solves += batch_solves
    return values, solves


def invert_full(grid: PgfGrid, *, imag_tol: float = 1e-6) -> ProbabilityGrid:
    """Invert a full PGF grid into transition probabilities.

    The inverse series transform of an exact grid is real; an imaginary
    residue above imag_tol indicates a broken grid (wrong symmetry, NaNs,
    inconsistent evaluations) and raises NumericalInconsistencyError.
    """
    coeffs = fourier.inverse_series_transform(grid.values)
    residue = float(np.abs(coeffs.imag).max())
    if residue > imag_tol:
        raise NumericalInconsistencyError(
            f"imaginary residue {residue:.3e} exceeds {imag_tol:.1e}; "
            "the generating-function grid is not conjugate-symmetric",
            residue=residue)
    return ProbabilityGrid(values=coeffs.real.copy(), n=grid.n, t=grid.t,
                           origin=grid.origin)


def invert_model(model: ModelSpec, t: float, j: int, k: int, n: int, *,
                 use_symmetry: bool = True, abs_tol: float = 1e-10,
                 rel_tol: float = 1e-8) -> tuple[ProbabilityGrid, PgfGrid]:
    """Convenience: grid evaluation plus inversion in one call."""
    pgf = full_pgf_grid(model, t, j, k, n, use_symmetry=use_symmetry,
                        abs_tol=abs_tol, rel_tol=rel_tol)
    return invert_full(pgf), pgf


def truncation_mass(grid: ProbabilityGrid) -> float:
    """Probability mass lying outside the grid window, estimated as
    max(0, 1 - sum); zero when the law is fully captured (up to aliasing)."""
    return max(0.0, 1.0 - grid.sum())
