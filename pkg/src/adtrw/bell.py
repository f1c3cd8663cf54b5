"""Incomplete and complete ordinary Bell polynomials of a waiting-time density.

The incomplete polynomial ``B[r, n]`` is the n-fold convolution power of
``psi`` evaluated at ``r``: the probability that the n-th success lands on
trial ``r``. Tables are built by repeated convolution; enumerating
partitions is left to the test-suite oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from adtrw._conv import convolution_powers
from adtrw.dtrp_core import WaitingTimeDensity, survival
from adtrw.errors import ParameterError

# r!/n! in double precision stays exact-enough only up to here.
EXPONENTIAL_BELL_MAX_R = 20


@dataclass(frozen=True, eq=False)
class BellTable:
    """``entries[n, r]`` is the incomplete ordinary Bell polynomial ``B_{r,n}``."""

    entries: np.ndarray
    source: WaitingTimeDensity | None = None

    @property
    def r_max(self) -> int:
        return self.entries.shape[1] - 1

    def __call__(self, r: int, n: int) -> float:
        if n > r or n < 0 or r < 0:
            return 0.0
        return float(self.entries[n, r])

    def to_rows(self):
        """``(r, n, value)`` triples with ``n <= r``, ordered by ``r`` then ``n``."""
        for r in range(self.r_max + 1):
            for n in range(r + 1):
                yield r, n, float(self.entries[n, r])


def incomplete_bell(d: WaitingTimeDensity, r_max: int, method: str = "auto") -> BellTable:
    if r_max > d.horizon:
        raise ParameterError(f"r_max={r_max} exceeds the density horizon {d.horizon}")
    delta = np.zeros(r_max + 1)
    delta[0] = 1.0
    return BellTable(convolution_powers(delta, d.padded, r_max, method=method), d)


def complete_bell(table: BellTable, v: complex, t: int) -> complex:
    """``B_t(v) = sum_{n=1}^{t} v^n B_{t,n}``, with ``B_0 = 1``."""
    if t > table.r_max:
        raise ParameterError(f"t={t} exceeds the table size {table.r_max}")
    if t == 0:
        return 1.0
    n = np.arange(1, t + 1)
    return np.sum(np.asarray(v) ** n * table.entries[1 : t + 1, t])


def complete_bell_series(table: BellTable, v: complex) -> np.ndarray:
    """``B_t(v)`` for every ``t = 0..r_max`` at once."""
    n = np.arange(table.r_max + 1)
    return (np.asarray(v) ** n) @ table.entries


def exponential_bell(table: BellTable) -> np.ndarray:
    """Exponential Bell polynomials ``B_{r,n} r!/n!`` for ``r <= 20``.

    Factorials are taken in double precision, which bounds the usable range.
    """
    if table.r_max > EXPONENTIAL_BELL_MAX_R:
        raise ParameterError(f"exponential Bell rescaling is limited to r <= {EXPONENTIAL_BELL_MAX_R}")
    fact = np.array([math.factorial(k) for k in range(table.r_max + 1)], dtype=float)
    return table.entries * fact[None, :] / fact[:, None]


def state_poly_via_bell(d: WaitingTimeDensity, v: complex, t: int, table: BellTable | None = None) -> complex:
    """``P(v, t) = sum_{r=0}^{t} S(t - r) B_r(v)``."""
    if t > d.horizon:
        raise ParameterError(f"t={t} exceeds the density horizon {d.horizon}")
    if table is None or table.r_max < t:
        table = incomplete_bell(d, t)
    s = survival(d)[: t + 1]
    complete = complete_bell_series(table, v)[: t + 1]
    return np.dot(s[::-1], complete)


def mean_arrivals_via_bell(d: WaitingTimeDensity, t: int, table: BellTable | None = None) -> float:
    """Expected number of successes in ``t`` trials, as ``sum_{r=1}^{t} B_r(1)``."""
    if t > d.horizon:
        raise ParameterError(f"t={t} exceeds the density horizon {d.horizon}")
    if t == 0:
        return 0.0
    if table is None or table.r_max < t:
        table = incomplete_bell(d, t)
    return float(math.fsum(complete_bell_series(table, 1.0)[1 : t + 1]))
