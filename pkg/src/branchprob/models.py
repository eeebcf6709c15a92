"""Two-type continuous-time Markov branching processes.

A process is specified by instantaneous offspring rates a_i(k, l): the rate
at which one type-i particle is replaced by k type-1 and l type-2 particles.
The diagonal entries a_1(1, 0) and a_2(0, 1) are the negated total event
rates, so each rate table sums to zero.

The probability generating function phi_{jk}(t, s1, s2) = E[s1^X1 s2^X2]
starting from (j, k) particles factors over ancestors,

    phi_{jk} = phi_{10}^j * phi_{01}^k,

and the per-particle functions solve the backward system

    d/dt phi_i(t) = u_i(phi_1(t), phi_2(t)),   phi_1(0) = s1, phi_2(0) = s2,

where u_i(s1, s2) = sum_{k,l} a_i(k, l) s1^k s2^l is the pseudo-generating
function of the type-i rates.

Evaluation is batch-oriented: a whole set of (s1, s2) arguments is stacked
into one vector ODE system (the component problems are independent), so a
full torus grid costs a single adaptive integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ode import OdeProblem, integrate

Rates = dict[tuple[int, int], float]

_S_TOL = 1e-12        # |s| may exceed 1 by at most this much
_S2_ONE_TOL = 1e-14   # closed forms with removable 1/(s2-1) singularities


@dataclass(frozen=True)
class TwoTypeRates:
    """Offspring rate tables for the two particle types.

    rates1[(k, l)] = a_1(k, l), rates2[(k, l)] = a_2(k, l). Off-diagonal
    entries are non-negative event rates; the diagonals a_1(1,0), a_2(0,1)
    are negative (or zero for a frozen type) and make each table sum to zero.
    """

    rates1: Rates
    rates2: Rates

    def __post_init__(self):
        for name, table, diag in (("rates1", self.rates1, (1, 0)),
                                  ("rates2", self.rates2, (0, 1))):
            for (k, l), a in table.items():
                if k < 0 or l < 0:
                    raise ValueError(f"{name}[{(k, l)}]: offspring counts "
                                     "must be non-negative")
                if (k, l) != diag and a < 0:
                    raise ValueError(f"{name}[{(k, l)}] = {a}: off-diagonal "
                                     "rates must be non-negative")
            if table.get(diag, 0.0) > 0:
                raise ValueError(f"{name}[{diag}] must be <= 0")
            total = math.fsum(table.values())
            if abs(total) > 1e-12:
                raise ValueError(f"{name} must sum to zero, got {total:.3e}")

    @classmethod
    def from_events(cls, events1: Rates, events2: Rates) -> "TwoTypeRates":
        """Build rate tables from off-diagonal event rates only.

        The diagonal entries are filled in as the negated event-rate totals.
        """
        r1 = {kl: float(a) for kl, a in events1.items() if kl != (1, 0)}
        r2 = {kl: float(a) for kl, a in events2.items() if kl != (0, 1)}
        r1[(1, 0)] = -math.fsum(r1.values())
        r2[(0, 1)] = -math.fsum(r2.values())
        return cls(r1, r2)

    def events(self, particle_type: int) -> list[tuple[int, int, float]]:
        """Positive-rate events [(k, l, rate)] for one particle type."""
        table, diag = ((self.rates1, (1, 0)) if particle_type == 1
                       else (self.rates2, (0, 1)))
        return [(k, l, a) for (k, l), a in sorted(table.items())
                if (k, l) != diag and a > 0]


@dataclass(frozen=True)
class ModelSpec:
    """A named process: rate tables plus optional analytic shortcuts.

    closed_form_phi2(t, s2), when present, evaluates phi_{01} exactly and
    lets the backward system reduce to the scalar phi_1 equation.
    """

    name: str
    rates: TwoTypeRates
    params: dict[str, float] = field(default_factory=dict)
    closed_form_phi2: Optional[Callable[[float, np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class PgfQuery:
    """Arguments of one generating-function evaluation."""

    t: float
    j: int
    k: int
    s1: complex
    s2: complex

    def __post_init__(self):
        if self.t < 0 or not np.isfinite(self.t):
            raise ValueError(f"t must be finite and >= 0, got {self.t}")
        if self.j < 0 or self.k < 0:
            raise ValueError(f"initial counts must be >= 0, got "
                             f"({self.j}, {self.k})")
        for name, s in (("s1", self.s1), ("s2", self.s2)):
            if abs(s) > 1.0 + _S_TOL:
                raise ValueError(f"|{name}| must be <= 1, got |{name}| = "
                                 f"{abs(s):.15g}")


def pseudo_gf(rates: TwoTypeRates, particle_type: int,
              s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """Evaluate u_i(s1, s2) = sum_{k,l} a_i(k, l) s1^k s2^l elementwise."""
    if particle_type not in (1, 2):
        raise ValueError(f"particle_type must be 1 or 2, got {particle_type}")
    table = rates.rates1 if particle_type == 1 else rates.rates2
    s1 = np.asarray(s1)
    s2 = np.asarray(s2)
    out = np.zeros(np.broadcast(s1, s2).shape, dtype=np.result_type(s1, s2))
    for (k, l), a in sorted(table.items()):
        if a != 0.0:
            out += a * _ipow(s1, k) * _ipow(s2, l)
    return out


def backward_rhs(rates: TwoTypeRates):
    """Right-hand side of the backward system d phi_i/dt = u_i(phi_1, phi_2).

    Returns f(t, y) acting on y = concat(phi_1 block, phi_2 block); the two
    halves may be vectors of matching length.
    """
    def f(t, y):
        if y.shape[0] % 2:
            raise ValueError("state must stack equal phi_1 and phi_2 blocks")
        half = y.shape[0] // 2
        p1, p2 = y[:half], y[half:]
        return np.concatenate([pseudo_gf(rates, 1, p1, p2),
                               pseudo_gf(rates, 2, p1, p2)])
    return f


def _ipow(z, e: int):
    """z**e for integer e >= 0 by repeated squaring."""
    if e < 0:
        raise ValueError("exponent must be non-negative")
    result = None
    base = z
    while e:
        if e & 1:
            result = base if result is None else result * base
        e >>= 1
        if e:
            base = base * base
    if result is None:
        return np.ones_like(np.asarray(z)) if isinstance(z, np.ndarray) else 1.0
    return result


def pgf_eval(model: ModelSpec, query: PgfQuery, *,
             abs_tol: float = 1e-10, rel_tol: float = 1e-8) -> complex:
    """Evaluate phi_{jk}(t, s1, s2) for a single argument."""
    values, _ = pgf_eval_batch(model, query.t, query.j, query.k,
                               np.array([query.s1], dtype=complex),
                               np.array([query.s2], dtype=complex),
                               abs_tol=abs_tol, rel_tol=rel_tol)
    return complex(values[0])


def pgf_eval_batch(model: ModelSpec, t: float, j: int, k: int,
                   s1: np.ndarray, s2: np.ndarray, *,
                   abs_tol: float = 1e-10, rel_tol: float = 1e-8,
                   ) -> tuple[np.ndarray, int]:
    """Evaluate phi_{jk}(t, s1[i], s2[i]) for all i in one integration.

    Returns (values, ode_solves) where ode_solves counts the grid points
    whose evaluation required numerical integration (analytic shortcuts:
    t = 0, j = k = 0, and j = 0 under a closed-form phi_2 cost nothing).
    """
    s1 = np.asarray(s1, dtype=complex)
    s2 = np.asarray(s2, dtype=complex)
    if s1.shape != s2.shape or s1.ndim != 1:
        raise ValueError("s1 and s2 must be 1-d arrays of equal length")
    if t < 0 or not np.isfinite(t):
        raise ValueError(f"t must be finite and >= 0, got {t}")
    if j < 0 or k < 0:
        raise ValueError(f"initial counts must be >= 0, got ({j}, {k})")
    over = max(np.abs(s1).max(initial=0.0), np.abs(s2).max(initial=0.0))
    if over > 1.0 + _S_TOL:
        raise ValueError(f"|s| must be <= 1 on the closed unit disc, "
                         f"got max |s| = {over:.15g}")

    if j == 0 and k == 0:
        return np.ones_like(s1), 0
    if t == 0.0:
        return _ipow(s1, j) * _ipow(s2, k), 0

    rates = model.rates
    if model.closed_form_phi2 is not None:
        phi2_t = model.closed_form_phi2(t, s2)
        if j == 0:
            return _ipow(phi2_t, k), 0
        cf = model.closed_form_phi2

        def rhs(tau, y):
            return pseudo_gf(rates, 1, y, cf(tau, s2))

        phi1_t = integrate(OdeProblem(rhs, s1, (0.0, t),
                                      abs_tol=abs_tol, rel_tol=rel_tol))
        solves = s1.size
    else:
        y0 = np.concatenate([s1, s2])
        phi = integrate(OdeProblem(backward_rhs(rates), y0, (0.0, t),
                                   abs_tol=abs_tol, rel_tol=rel_tol))
        phi1_t, phi2_t = phi[:s1.size], phi[s1.size:]
        solves = s1.size

    return _ipow(phi1_t, j) * _ipow(phi2_t, k), solves


def hsc_model(rho: float, nu: float, mu: float) -> ModelSpec:
    """Hematopoiesis model: self-renewal, differentiation, and death.

    A type-1 particle (stem cell) divides in two at rate rho or turns into
    a type-2 particle (progenitor) at rate nu; a type-2 particle dies at
    rate mu. phi_{01} is available in closed form:
    phi_{01}(t, s2) = 1 + (s2 - 1) e^{-mu t}.
    """
    for name, v in (("rho", rho), ("nu", nu), ("mu", mu)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    rates = TwoTypeRates.from_events({(2, 0): rho, (0, 1): nu},
                                     {(0, 0): mu})

    def phi2(t, s2):
        return 1.0 + (np.asarray(s2, dtype=complex) - 1.0) * math.exp(-mu * t)

    return ModelSpec("hsc", rates, {"rho": rho, "nu": nu, "mu": mu}, phi2)


def bds_model(beta: float, sigma: float, delta: float) -> ModelSpec:
    """Birth-death-shift model for transposable genomic elements.

    A type-1 particle (original copy) spawns a type-2 copy at rate beta,
    shifts into a type-2 particle at rate sigma, or dies at rate delta;
    type-2 particles branch at rate beta and die at rate delta. phi_{01} is
    the classical linear birth-death generating function.
    """
    for name, v in (("beta", beta), ("sigma", sigma), ("delta", delta)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    rates = TwoTypeRates.from_events(
        {(1, 1): beta, (0, 1): sigma, (0, 0): delta},
        {(0, 2): beta, (0, 0): delta})

    degenerate = abs(beta - delta) < 1e-8

    def phi2(t, s2):
        s2 = np.asarray(s2, dtype=complex)
        at_one = np.abs(s2 - 1.0) < _S2_ONE_TOL
        safe = np.where(at_one, 2.0, s2)
        if degenerate:
            # limit of the closed form as delta -> beta
            inner = 1.0 / (safe - 1.0) - beta * t
        else:
            d = delta - beta
            inner = (beta / d) + (1.0 / (safe - 1.0) - beta / d) * math.exp(d * t)
        return np.where(at_one, 1.0 + 0.0j, 1.0 + 1.0 / inner)

    return ModelSpec("bds", rates,
                     {"beta": beta, "sigma": sigma, "delta": delta}, phi2)


_NAMED_RATES = {
    "hsc": {"rho": 0.125, "nu": 0.104, "mu": 0.147},
    "bds": {"beta": 0.0156, "sigma": 0.00426, "delta": 0.0187},
}
_DEFAULT_TIMES = {"hsc": 1.0, "bds": 0.35}


def named_model(name: str, rates: Optional[dict[str, float]] = None) -> ModelSpec:
    """Construct a built-in model by name, optionally overriding rates."""
    if name not in _NAMED_RATES:
        raise ValueError(f"unknown model {name!r}; available: "
                         f"{sorted(_NAMED_RATES)}")
    params = dict(_NAMED_RATES[name])
    if rates:
        unknown = set(rates) - set(params)
        if unknown:
            raise ValueError(f"unknown rate names for {name!r}: {sorted(unknown)}")
        params.update(rates)
    return (hsc_model(**params) if name == "hsc" else bds_model(**params))


def default_time(name: str) -> float:
    """Default observation-interval length of a named model."""
    if name not in _DEFAULT_TIMES:
        raise ValueError(f"unknown model {name!r}")
    return _DEFAULT_TIMES[name]
