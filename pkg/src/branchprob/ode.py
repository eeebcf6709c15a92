"""Adaptive Dormand-Prince 5(4) integration for real or complex systems.

The embedded pair (Dormand & Prince 1980) advances with the 5th-order
solution and controls the step from the difference against the embedded
4th-order one. State vectors may be complex; all arithmetic is carried out
natively in the complex field, which for a linear test problem agrees with
integrating the equivalent coupled real system of twice the dimension.

The integrator is deliberately array-oriented: a batch of independent scalar
problems can be stacked into one vector problem and solved in a single call,
with the shared step chosen so that every component meets tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegrationError

# Butcher tableau, Dormand-Prince 5(4).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b5 - b4: weights of the embedded error estimate
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


@dataclass
class OdeProblem:
    """An initial value problem y' = rhs(t, y), y(t_start) = y0.

    rhs must accept and return arrays of the same shape as y0. Tolerances
    are applied per component: scale_i = abs_tol + rel_tol * |y_i|.
    """

    rhs: Callable[[float, np.ndarray], np.ndarray]
    y0: np.ndarray
    t_span: tuple[float, float]
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_steps: int = 1_000_000

    def __post_init__(self):
        self.y0 = np.atleast_1d(np.asarray(self.y0))
        t0, t1 = self.t_span
        if not (np.isfinite(t0) and np.isfinite(t1)):
            raise ValueError("t_span must be finite")
        if t1 < t0:
            raise ValueError(f"t_span must be forward in time, got {self.t_span}")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not np.all(np.isfinite(self.y0)):
            raise ValueError("y0 contains non-finite entries")


def integrate(problem: OdeProblem) -> np.ndarray:
    """Integrate to the end of the span and return y(t_end).

    Raises IntegrationError (carrying the last time reached and, when
    attributable, the offending component index) on step underflow,
    non-finite state, or step-count exhaustion.
    """
    t0, t1 = problem.t_span
    y = np.array(problem.y0, copy=True)
    if t1 == t0:
        return y
    complex_mode = np.iscomplexobj(y)
    if not complex_mode:
        y = y.astype(np.float64, copy=False)

    rhs = problem.rhs
    atol, rtol = problem.abs_tol, problem.rel_tol
    t = t0
    f = np.asarray(rhs(t, y))
    _check_finite(f, t, "right-hand side at the initial point")
    h = _initial_step(rhs, t, y, f, t1 - t0, atol, rtol)

    k = [None] * 7
    for _ in range(problem.max_steps):
        # The final step is clamped to land on t1 exactly and may be
        # arbitrarily short; the underflow guard only applies while a
        # macroscopic remainder is still ahead.
        last = h >= t1 - t
        if last:
            h = t1 - t
        elif h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(
                f"step size underflow at t={t:.6g}", t_reached=t,
                component=_worst_component(f))
        k[0] = f  # FSAL: first stage is the previous step's last evaluation
        for i in range(1, 7):
            yi = y + h * sum(a * ks for a, ks in zip(_A[i], k[:i]) if a != 0.0)
            k[i] = np.asarray(rhs(t + _C[i] * h, yi))
        y_new = y + h * sum(b * ks for b, ks in zip(_B5, k) if b != 0.0)
        err = h * sum(e * ks for e, ks in zip(_E, k) if e != 0.0)

        if not (np.all(np.isfinite(y_new.view(np.float64)))
                and np.all(np.isfinite(err.view(np.float64)))):
            raise IntegrationError(
                f"non-finite state produced at t={t:.6g}", t_reached=t,
                component=_worst_component(y_new))

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = np.abs(err) / scale
        err_norm = np.sqrt(np.mean(ratio ** 2))

        if err_norm <= 1.0:
            if last:
                return y_new
            t += h
            y = y_new
            f = k[6]  # stage 7 is f(t+h, y_new)
            factor = _MAX_FACTOR if err_norm == 0.0 else min(
                _MAX_FACTOR, _SAFETY * err_norm ** -0.2)
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)

    raise IntegrationError(
        f"step budget ({problem.max_steps}) exhausted at t={t:.6g}",
        t_reached=t, component=None)


def _initial_step(rhs, t0, y0, f0, span, atol, rtol):
    """Hairer-style starting step guess, clipped to the span."""
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / scale) ** 2))
    h0 = 1e-6 * span if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = np.asarray(rhs(t0 + h0, y1))
    d2 = np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def _check_finite(arr, t, what):
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise IntegrationError(f"non-finite {what} (t={t:.6g})", t_reached=t,
                               component=_worst_component(arr))


def _worst_component(arr):
    flat = np.asarray(arr).ravel()
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        return int(bad[0])
    return int(np.argmax(np.abs(flat)))
