"""Walks subordinated to a fractional Poisson clock.

The clock ``M(t)`` has Mittag-Leffler waiting times with survival
``E_mu(-xi0 t^mu)``; every clock arrival runs one generator trial. The
composed counting process is ``N[M(t)]`` and the walk is ``Y_{M(t)}``.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate

from adtrw.dtrp_core import WaitingTimeDensity, lambda_poly, state_table
from adtrw.errors import EnvelopeError, ParameterError
from adtrw.mc import McEnsemble, actrw_sample
from adtrw.walk import JumpDensity

SERIES_RADIUS = 5.0
# Largest xi0 t^mu for which the fractional Poisson series is offered.
ENVELOPE = 20.0
TAIL_TOL = 1e-12
NEGATIVE_SLACK = 1e-10
_SERIES_MAX_TERMS = 2000


@dataclass(frozen=True)
class MLParams:
    """Clock parameters: ``mu`` in ``(0, 1]`` and rate constant ``xi0 > 0``."""

    mu: float
    xi0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise ParameterError(f"mu must lie in (0, 1], got {self.mu}")
        if not self.xi0 > 0.0 or not math.isfinite(self.xi0):
            raise ParameterError(f"xi0 must be positive, got {self.xi0}")

    def scaled_time(self, t: float) -> float:
        """``xi0 t^mu``, the natural argument of every clock quantity."""
        if t < 0:
            raise ParameterError("time must be non-negative")
        return self.xi0 * t**self.mu


def _series_terms(mu: float, x: float) -> int | None:
    """Terms needed for ``sum x^k / Gamma(mu k + 1)`` to reach 1e-20, or None if too many."""
    if x == 0.0:
        return 1
    lx = math.log(x)
    for k in range(1, _SERIES_MAX_TERMS):
        if k * lx - math.lgamma(mu * k + 1.0) < -46.0 and mu * k + 1.0 > x ** (1.0 / mu):
            return k + 1
    return None


def _ml_series(mu: float, x: float, n_terms: int) -> float:
    peak = max(k * math.log(x) - math.lgamma(mu * k + 1.0) for k in range(n_terms)) if x > 0 else 0.0
    with mpmath.workdps(25 + int(peak / math.log(10)) + 1):
        mx, mm = -mpmath.mpf(x), mpmath.mpf(mu)
        # the Gamma argument must be formed in extended precision too
        total = mpmath.fsum(mx**k / mpmath.gamma(mm * k + 1) for k in range(n_terms))
        return float(total)


def _ml_integral(mu: float, x: float) -> float:
    """``E_mu(-x) = sin(mu pi)/(pi mu) int_0^inf exp(-(x y)^(1/mu)) / (y^2 + 2 y cos(mu pi) + 1) dy``."""
    c = math.cos(mu * math.pi)

    def f(y):
        return math.exp(-((x * y) ** (1.0 / mu))) / (y * y + 2.0 * y * c + 1.0)

    # tolerances sit at the roundoff floor; quad flags that but the value holds
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
        tail, _ = integrate.quad(f, 1.0, math.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    return math.sin(mu * math.pi) / (math.pi * mu) * (head + tail)


def mittag_leffler(mu: float, z: float, method: str = "auto") -> float:
    """``E_mu(z)`` on the negative real axis.

    Power series (in extended precision) for ``|z| <= 5`` when it converges
    in a modest number of terms, otherwise the real-axis integral form.
    ``method`` may force ``"series"`` or ``"integral"``.
    """
    if not 0.0 < mu <= 1.0:
        raise ParameterError(f"mu must lie in (0, 1], got {mu}")
    if z > 0.0:
        raise ParameterError(f"mittag_leffler is defined here for z <= 0, got {z}")
    x = -float(z)
    if mu == 1.0 and method == "auto":
        return math.exp(z)
    if x == 0.0:
        return 1.0
    n_terms = _series_terms(mu, x)
    if method == "auto":
        method = "series" if x <= SERIES_RADIUS and n_terms is not None else "integral"
    if method == "series":
        if n_terms is None:
            raise EnvelopeError(f"series for E_{mu}({z}) needs more than {_SERIES_MAX_TERMS} terms")
        return _ml_series(mu, x, n_terms)
    if method == "integral":
        if mu == 1.0:
            return math.exp(z)
        return _ml_integral(mu, x)
    raise ParameterError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class ClockStates:
    """``P(M(t) = m)`` for ``m = 0..len(probs)-1`` and the neglected mass."""

    t: float
    probs: np.ndarray
    deficit: float
    clamped: int = 0


@functools.lru_cache(maxsize=256)
def _clock_states(mu: float, x: float, m_max: int | None) -> tuple[tuple[float, ...], int]:
    if x == 0.0:
        return (1.0,), 0
    lx = math.log(x)
    # Terms of sum_j C(j, m) (-1)^(j-m) x^j / Gamma(mu j + 1) stay below 2^j x^j / Gamma(mu j + 1).
    logs = []
    j = 0
    while True:
        logs.append(j * (lx + math.log(2.0)) - math.lgamma(mu * j + 1.0))
        if j > 10 and logs[-1] < -80.0 and logs[-1] < logs[-2]:
            break
        j += 1
    n_j = len(logs)
    digits = 30 + int(max(logs) / math.log(10))
    out = []
    clamped = 0
    with mpmath.workdps(digits):
        mx = mpmath.mpf(x)
        terms = [mx**k / mpmath.gamma(mpmath.mpf(mu) * k + 1) for k in range(n_j)]
        total = mpmath.mpf(0)
        m = 0
        while m < n_j:
            # C(j, m) for j = m.. built by the ratio C(j+1, m)/C(j, m) = (j+1)/(j+1-m)
            binom = mpmath.mpf(1)
            acc = mpmath.mpf(0)
            for j in range(m, n_j):
                if j > m:
                    binom = binom * j / (j - m)
                acc += -binom * terms[j] if (j - m) % 2 else binom * terms[j]
            value = float(acc)
            if value < 0.0:
                if value < -NEGATIVE_SLACK:
                    raise EnvelopeError(f"clock probability {value} at m={m}: series lost accuracy")
                clamped += 1
                value = 0.0
            out.append(value)
            total += acc
            m += 1
            if m_max is not None:
                if m > m_max:
                    break
            elif 1 - total < TAIL_TOL:
                break
    return tuple(out), clamped


def frac_poisson_states(clock: MLParams, t: float, m_max: int | None = None) -> ClockStates:
    """State probabilities of the fractional Poisson clock at time ``t``.

    ``P(M(t) = m) = sum_{j >= m} C(j, m) (-1)^(j-m) x^j / Gamma(mu j + 1)``
    with ``x = xi0 t^mu``, summed in extended precision. States are added
    until the remaining mass is below 1e-12, or up to ``m_max``.
    """
    x = clock.scaled_time(t)
    if x > ENVELOPE:
        raise EnvelopeError(
            f"xi0 t^mu = {x:.6g} exceeds the series envelope {ENVELOPE}; use the Monte Carlo route"
        )
    probs, clamped = _clock_states(float(clock.mu), float(x), m_max)
    arr = np.array(probs)
    return ClockStates(float(t), arr, max(0.0, 1.0 - math.fsum(arr)), clamped)


@dataclass(frozen=True, eq=False)
class ComposedStateTable:
    """``probs[k, n] = P(N[M(t_k)] = n)`` with per-time truncation diagnostics."""

    times: np.ndarray
    probs: np.ndarray
    m_used: np.ndarray
    deficits: np.ndarray
    meta: dict = field(default_factory=dict)


def composed_states(
    d: WaitingTimeDensity,
    clock: MLParams,
    times,
    n_max: int | None = None,
) -> ComposedStateTable:
    """``P(N[M(t)] = n) = sum_m P(M(t) = m) Phi_n(m)`` on a grid of times."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    clocks = [frac_poisson_states(clock, t) for t in times]
    m_top = max(c.probs.shape[0] - 1 for c in clocks)
    if m_top > d.horizon:
        raise ParameterError(f"clock needs {m_top} trials but the density horizon is {d.horizon}")
    table = state_table(d, m_top).probs
    n_cols = m_top + 1 if n_max is None else n_max + 1
    out = np.zeros((times.size, n_cols))
    for k, c in enumerate(clocks):
        m = c.probs.shape[0]
        full = table[:, :m] @ c.probs
        keep = min(n_cols, full.shape[0])
        out[k, :keep] = full[:keep]
    return ComposedStateTable(
        times,
        out,
        np.array([c.probs.shape[0] - 1 for c in clocks]),
        np.array([c.deficit for c in clocks]),
        {"mu": clock.mu, "xi0": clock.xi0, "density": d.name},
    )


def pi_series(d: WaitingTimeDensity, clock: MLParams, a: complex, b: complex, t: float) -> complex:
    """``Pi(a, b, t) = sum_m P(M(t) = m) Lambda(a, b, m)``."""
    c = frac_poisson_states(clock, t)
    m = c.probs.shape[0] - 1
    if m > d.horizon:
        raise ParameterError(f"clock needs {m} trials but the density horizon is {d.horizon}")
    lam = lambda_poly(d, a, b, m)
    value = np.dot(c.probs, lam)
    return complex(value) if np.iscomplexobj(value) else float(value)


def pi_geometric_closed(p: float, clock: MLParams, a: float, b: float, t: float) -> float:
    """``E_mu(-xi0 (1 - q b - p a) t^mu)`` for a Bernoulli generator."""
    rate = clock.xi0 * (1.0 - (1.0 - p) * b - p * a)
    return mittag_leffler(clock.mu, -rate * t**clock.mu)


def actrw_mc(
    d: WaitingTimeDensity,
    clock: MLParams,
    wplus: JumpDensity,
    wminus: JumpDensity,
    times,
    n_samples: int,
    seed: int,
) -> McEnsemble:
    """Monte Carlo of ``Y_{M(t)}`` recorded at ``times``."""
    return actrw_sample(d, clock.mu, clock.xi0, wplus, wminus, np.atleast_1d(times), n_samples, seed)
