"""Exact lattice distributions of asymmetric discrete-time random walks.

At every time step the generator process runs one trial. A success moves
the walker right by a magnitude drawn from ``W+``; a fail moves it left by
a magnitude drawn from ``W-``. With unit jumps this is the simple walk,
whose position is ``Y_t = 2 N(t) - t``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from adtrw.dtrp_core import StateTable, WaitingTimeDensity, read_values, state_table, survival
from adtrw.errors import ParameterError

SUM_TOL = 1e-10


class Direction(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1


@dataclass(frozen=True, eq=False)
class JumpDensity:
    """Jump magnitudes ``r = 1..R`` with probabilities ``probs[r - 1]``."""

    direction: Direction
    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ParameterError("jump density needs at least one magnitude")
        if np.any(probs < 0):
            raise ParameterError("jump density has negative entries")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ParameterError(f"jump density sums to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def unit(cls, direction: Direction) -> "JumpDensity":
        return cls(direction, np.array([1.0]))

    @classmethod
    def from_file(cls, path, direction: Direction) -> "JumpDensity":
        return cls(direction, np.array(read_values(path, "jump density")))

    @property
    def max_jump(self) -> int:
        return self.probs.shape[0]

    @property
    def is_unit(self) -> bool:
        return self.max_jump == 1

    def lattice(self) -> tuple[int, np.ndarray]:
        """``(offset, probs)`` of the signed single-jump law on its window."""
        arr = np.concatenate(([0.0], self.probs))
        if self.direction is Direction.POSITIVE:
            return 0, arr
        return -self.max_jump, arr[::-1].copy()


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Probabilities on the contiguous sites ``offset, offset + 1, ...`` at time ``t``."""

    t: int
    offset: int
    probs: np.ndarray

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.probs.shape[0])

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def at(self, site) -> np.ndarray | float:
        """Probability at ``site`` (scalar or array), zero outside the window."""
        idx = np.asarray(site) - self.offset
        inside = (idx >= 0) & (idx < self.probs.shape[0])
        out = np.where(inside, self.probs[np.clip(idx, 0, self.probs.shape[0] - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        return float(np.dot(self.sites, self.probs))

    def tvd(self, other: "LatticeDistribution") -> float:
        lo = min(self.offset, other.offset)
        hi = max(self.offset + len(self.probs), other.offset + len(other.probs))
        sites = np.arange(lo, hi)
        return 0.5 * float(np.abs(self.at(sites) - other.at(sites)).sum())


def _check_t(d: WaitingTimeDensity, t: int) -> None:
    if t < 0:
        raise ParameterError("time must be non-negative")
    if t > d.horizon:
        raise ParameterError(f"t={t} exceeds the density horizon {d.horizon}")


def simple_walk_dist(d: WaitingTimeDensity, t: int, table: StateTable | None = None) -> LatticeDistribution:
    """``P(Y_t = r) = Phi_{(r+t)/2}(t)`` on the window ``[-t, t]``."""
    _check_t(d, t)
    if table is None or table.t_max < t or table.n_max < t:
        table = state_table(d, t)
    probs = np.zeros(2 * t + 1)
    probs[::2] = table.probs[: t + 1, t]
    return LatticeDistribution(t, -t, probs)


def simple_walk_q(d: WaitingTimeDensity, t: int, table: StateTable | None = None) -> LatticeDistribution:
    """Distribution seen from the moving frame: ``Q(r) = P(r - t)`` on ``[0, 2t]``."""
    p = simple_walk_dist(d, t, table)
    return LatticeDistribution(t, 0, p.probs)


def return_probability(d: WaitingTimeDensity, t: int, table: StateTable | None = None) -> float:
    _check_t(d, t)
    if t % 2:
        return 0.0
    if table is None or table.t_max < t or table.n_max < t // 2:
        table = state_table(d, t, n_max=t // 2)
    return float(table.probs[t // 2, t])


def _lattice_powers(offset: int, probs: np.ndarray, k_max: int):
    """Convolution powers ``0..k_max`` of a lattice law, as (offset, probs) pairs."""
    out = [(0, np.array([1.0]))]
    for _ in range(k_max):
        o, p = out[-1]
        out.append((o + offset, np.convolve(p, probs)))
    return out


def general_walk_dist(
    d: WaitingTimeDensity,
    wplus: JumpDensity,
    wminus: JumpDensity,
    t: int,
    window: tuple[int, int] | None = None,
    table: StateTable | None = None,
) -> LatticeDistribution:
    """``sum_n Phi_n(t) (W+^{*n} * W-^{*(t-n)})`` on an inclusive site window.

    The default window is the full reachable range ``[-t R-, t R+]``. An
    explicit window must contain it.
    """
    _check_t(d, t)
    if wplus.direction is not Direction.POSITIVE or wminus.direction is not Direction.NEGATIVE:
        raise ParameterError("wplus must point right and wminus left")
    lo_req, hi_req = -t * wminus.max_jump, t * wplus.max_jump
    if window is None:
        window = (lo_req, hi_req)
    lo, hi = window
    if lo > lo_req or hi < hi_req:
        raise ParameterError(
            f"window [{lo}, {hi}] misses reachable sites; need at least [{lo_req}, {hi_req}] "
            f"({hi_req - lo_req + 1} sites)"
        )
    if table is None or table.t_max < t or table.n_max < t:
        table = state_table(d, t)
    plus = _lattice_powers(*wplus.lattice(), t)
    minus = _lattice_powers(*wminus.lattice(), t)
    out = np.zeros(hi - lo + 1)
    for n in range(t + 1):
        weight = table.probs[n, t]
        if weight == 0.0:
            continue
        (op, pp), (om, pm) = plus[n], minus[t - n]
        conv = np.convolve(pp, pm)
        start = op + om - lo
        out[start : start + conv.shape[0]] += weight * conv
    return LatticeDistribution(t, lo, out)


def simple_walk_series(d: WaitingTimeDensity, t_max: int) -> list[LatticeDistribution]:
    table = state_table(d, t_max)
    return [simple_walk_dist(d, t, table) for t in range(t_max + 1)]


def renewal_residual(d: WaitingTimeDensity, series) -> float:
    """Largest violation of the simple-walk renewal equation over a series.

    Checks ``P_j(t) = S(t) [j = -t] + sum_{r=1}^{t} psi(r) P_{j+r-2}(t - r)``
    for ``t = 1..len(series) - 1`` at every site of each window.
    """
    series = list(series)
    if not series:
        raise ParameterError("empty distribution series")
    first = series[0]
    if first.t != 0 or abs(first.at(0) - 1.0) > SUM_TOL or abs(first.total - 1.0) > SUM_TOL:
        raise ParameterError("series must start with the point mass at site 0 for t=0")
    for k, p in enumerate(series):
        if p.t != k:
            raise ParameterError(f"series entry {k} carries time {p.t}")
    t_max = len(series) - 1
    if t_max > d.horizon:
        raise ParameterError(f"series length exceeds the density horizon {d.horizon}")
    s = survival(d)
    psi = d.padded
    worst = 0.0
    for t in range(1, t_max + 1):
        p = series[t]
        lo = min(p.offset, -t)
        hi = max(p.offset + len(p.probs) - 1, t)
        sites = np.arange(lo, hi + 1)
        expected = np.where(sites == -t, s[t], 0.0)
        for r in range(1, t + 1):
            if psi[r] != 0.0:
                expected = expected + psi[r] * series[t - r].at(sites + r - 2)
        worst = max(worst, float(np.max(np.abs(p.at(sites) - expected))))
    return worst
