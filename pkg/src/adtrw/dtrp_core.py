"""Discrete-time renewal ("generator") processes.

A generator process runs Bernoulli-like trials at ``t = 1, 2, ...``; the
waiting time between successes has density ``psi(t)`` on ``t >= 1``. From
``psi`` everything else follows by discrete convolution:

* survival ``S(t) = P(no success in t trials)``
* state probabilities ``Phi_n(t) = P(N(t) = n) = (S * psi^{*n})(t)``
* the state polynomial ``Lambda(a, b, t) = E[a^N(t) b^(t - N(t))]``
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from adtrw._conv import convolution_powers
from adtrw.errors import ParameterError

NORMALIZATION_TOL = 1e-12


class TailClass(enum.Enum):
    LIGHT = "light"
    FAT = "fat"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class WaitingTimeDensity:
    """Waiting-time density tabulated on ``t = 1..horizon``.

    ``probs[k]`` holds ``psi(k + 1)``. ``tail_mass`` is the probability of a
    wait longer than the horizon: exact for the built-in families, the raw
    mass deficit ``1 - sum(psi)`` for tabulated input.
    """

    probs: np.ndarray
    tail: TailClass = TailClass.UNKNOWN
    mean_wait: float | None = None
    mu: float | None = None
    a_mu: float | None = None
    tail_mass: float = 0.0
    name: str = "tabulated"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def horizon(self) -> int:
        return self.probs.shape[0]

    @property
    def alpha1(self) -> float:
        return float(self.probs[0])

    @property
    def padded(self) -> np.ndarray:
        """``psi`` indexed directly by time, with ``psi(0) = 0``."""
        return np.concatenate(([0.0], self.probs))

    @property
    def mass_deficit(self) -> float:
        return 1.0 - math.fsum(self.probs)

    def __repr__(self) -> str:
        return f"WaitingTimeDensity({self.name}, horizon={self.horizon}, tail={self.tail.value})"


def geometric(p: float, horizon: int) -> WaitingTimeDensity:
    _check_horizon(horizon)
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"geometric p must lie in (0, 1], got {p}")
    t = np.arange(1, horizon + 1)
    q = 1.0 - p
    probs = p * q ** (t - 1.0)
    return WaitingTimeDensity(
        probs, TailClass.LIGHT, mean_wait=1.0 / p, tail_mass=q**horizon,
        name=f"geometric:p={p!r}", params={"p": p},
    )


def sibuya(beta: float, horizon: int) -> WaitingTimeDensity:
    _check_horizon(horizon)
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"sibuya beta must lie in (0, 1), got {beta}")
    # psi(k) = (-1)^(k-1) binom(beta, k), via the ratio psi(k+1)/psi(k) = (k - beta)/(k + 1)
    k = np.arange(1, horizon)
    probs = beta * np.concatenate(([1.0], np.cumprod((k - beta) / (k + 1))))
    # S(T) = (-1)^T binom(beta - 1, T) = prod_{k<=T} (1 - beta/k)
    tail = float(np.exp(np.sum(np.log1p(-beta / np.arange(1, horizon + 1)))))
    return WaitingTimeDensity(
        probs, TailClass.FAT, mu=beta, a_mu=1.0, tail_mass=tail,
        name=f"sibuya:beta={beta!r}", params={"beta": beta},
    )


def shifted_poisson(lam: float, horizon: int) -> WaitingTimeDensity:
    _check_horizon(horizon)
    if not lam >= 0.0:
        raise ParameterError(f"poisson lambda must be >= 0, got {lam}")
    if lam == 0.0:
        d = trivial(horizon)
        return WaitingTimeDensity(
            d.probs, TailClass.LIGHT, mean_wait=1.0, name="poisson:lambda=0.0",
            params={"lambda": 0.0},
        )
    t = np.arange(1, horizon + 1)
    probs = stats.poisson.pmf(t - 1, lam)
    return WaitingTimeDensity(
        probs, TailClass.LIGHT, mean_wait=1.0 + lam,
        tail_mass=float(stats.poisson.sf(horizon - 1, lam)),
        name=f"poisson:lambda={lam!r}", params={"lambda": lam},
    )


def trivial(horizon: int) -> WaitingTimeDensity:
    _check_horizon(horizon)
    probs = np.zeros(horizon)
    probs[0] = 1.0
    return WaitingTimeDensity(probs, TailClass.LIGHT, mean_wait=1.0, name="trivial")


def tabulated(values, horizon: int | None = None) -> WaitingTimeDensity:
    """Density from explicit values ``psi(1), psi(2), ...``.

    A ``horizon`` longer than the data pads with zeros; a shorter one truncates.
    """
    probs = np.asarray(list(values), dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ParameterError("tabulated density needs at least one value")
    if not np.all(np.isfinite(probs)):
        raise ParameterError("tabulated density has non-finite entries")
    if np.any(probs < 0):
        first = int(np.argmax(probs < 0)) + 1
        raise ParameterError(f"tabulated density is negative at t={first}")
    if horizon is not None:
        _check_horizon(horizon)
        probs = np.pad(probs, (0, max(0, horizon - probs.size)))[:horizon]
    partial = np.cumsum(probs)
    if partial[-1] > 1.0 + NORMALIZATION_TOL:
        first = int(np.argmax(partial > 1.0 + NORMALIZATION_TOL)) + 1
        raise ParameterError(f"tabulated density partial sum exceeds 1 at t={first}")
    return WaitingTimeDensity(probs, TailClass.UNKNOWN, tail_mass=max(0.0, 1.0 - math.fsum(probs)))


def _check_horizon(horizon: int) -> None:
    if int(horizon) != horizon or horizon < 1:
        raise ParameterError(f"horizon must be a positive integer, got {horizon}")


_SPEC_RE = re.compile(r"^\s*(?P<kind>[a-z_]+)\s*(?::\s*(?P<rest>.*))?$")


def parse_density_spec(text: str) -> tuple[str, dict]:
    """Split ``kind:key=value`` (or ``file:<path>``) into its parts."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ParameterError(f"malformed density spec {text!r}")
    kind, rest = m["kind"], m["rest"]
    if kind == "file":
        if not rest:
            raise ParameterError("file: density spec needs a path")
        return kind, {"path": rest.strip()}
    params = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ParameterError(f"expected key=value in density spec, got {item!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ParameterError(f"non-numeric value for {key.strip()!r}: {value!r}") from None
    return kind, params


_REQUIRED = {"geometric": "p", "sibuya": "beta", "poisson": "lambda", "trivial": None}


def read_values(path, what: str = "value") -> list[float]:
    """Numbers from a text file, whitespace separated; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read {what} file {path}: {exc}") from None
    values = []
    for lineno, line in enumerate(text.splitlines(), 1):
        for token in line.split("#", 1)[0].split():
            try:
                values.append(float(token))
            except ValueError:
                raise ParameterError(f"{what} file {path}, line {lineno}: not a number: {token!r}") from None
    return values


def make_density(spec: str, horizon: int | None) -> WaitingTimeDensity:
    """Build a density from the textual grammar used by the CLI and configs.

    >>> make_density("geometric:p=0.5", 3).probs
    array([0.5  , 0.25 , 0.125])
    """
    kind, params = parse_density_spec(spec)
    if kind == "file":
        path = Path(params["path"])
        return tabulated(read_values(path, "density"), horizon)
    if kind not in _REQUIRED:
        raise ParameterError(f"unknown density kind {kind!r}")
    if horizon is None:
        raise ParameterError(f"density {kind!r} needs a horizon")
    key = _REQUIRED[kind]
    expected = set() if key is None else {key}
    if set(params) != expected:
        raise ParameterError(f"density {kind!r} takes parameters {sorted(expected)}, got {sorted(params)}")
    if kind == "geometric":
        return geometric(params["p"], horizon)
    if kind == "sibuya":
        return sibuya(params["beta"], horizon)
    if kind == "poisson":
        return shifted_poisson(params["lambda"], horizon)
    return trivial(horizon)


def survival(d: WaitingTimeDensity) -> np.ndarray:
    """``S(t)`` for ``t = 0..horizon``.

    Summed from the tail (``tail_mass`` plus the remaining tabulated mass), so
    small survival values keep their relative accuracy.
    """
    tail_sums = np.cumsum(d.probs[::-1])[::-1]
    s = np.empty(d.horizon + 1)
    s[:-1] = tail_sums + d.tail_mass
    s[-1] = d.tail_mass
    s[0] = 1.0
    return s


@dataclass(frozen=True, eq=False)
class StateTable:
    """``probs[n, t] = P(N(t) = n)`` for ``n <= n_max``, ``t <= t_max``."""

    probs: np.ndarray

    @property
    def t_max(self) -> int:
        return self.probs.shape[1] - 1

    @property
    def n_max(self) -> int:
        return self.probs.shape[0] - 1

    @property
    def complete(self) -> bool:
        """True when every state ``n <= t`` is present for all tabulated times."""
        return self.n_max >= self.t_max

    def __getitem__(self, key):
        return self.probs[key]

    def column(self, t: int) -> np.ndarray:
        """State probabilities ``n = 0..min(t, n_max)`` at time ``t``."""
        return self.probs[: min(t, self.n_max) + 1, t]


def state_table(
    d: WaitingTimeDensity,
    t_max: int | None = None,
    n_max: int | None = None,
    method: str = "auto",
) -> StateTable:
    """State probabilities by the convolution recursion ``Phi_n = Phi_{n-1} * psi``."""
    t_max = d.horizon if t_max is None else t_max
    if t_max > d.horizon:
        raise ParameterError(f"t_max={t_max} exceeds the density horizon {d.horizon}")
    if t_max < 0:
        raise ParameterError("t_max must be non-negative")
    n_max = t_max if n_max is None else min(n_max, t_max)
    s = survival(d)[: t_max + 1]
    rows = convolution_powers(s, d.padded, n_max, method=method)
    return StateTable(rows)


def _check_unit_disc(*values):
    for v in values:
        if abs(v) > 1.0 + 1e-12:
            raise ParameterError(f"argument {v!r} lies outside the closed unit disc")


def lambda_poly(d: WaitingTimeDensity, a: complex, b: complex, t_max: int | None = None) -> np.ndarray:
    """``Lambda(a, b, t)`` for ``t = 0..t_max`` from the renewal equation.

    ``Lambda(t) = b^t S(t) + sum_{r=1}^{t} a b^(r-1) psi(r) Lambda(t - r)``.
    """
    t_max = d.horizon if t_max is None else t_max
    if t_max > d.horizon:
        raise ParameterError(f"t_max={t_max} exceeds the density horizon {d.horizon}")
    _check_unit_disc(a, b)
    dtype = complex if isinstance(a, complex) or isinstance(b, complex) else float
    s = survival(d)[: t_max + 1]
    powers_b = np.asarray(b, dtype=dtype) ** np.arange(t_max + 1)
    w = np.zeros(t_max + 1, dtype=dtype)
    w[1:] = a * powers_b[:-1] * d.probs[:t_max]
    src = powers_b * s
    lam = np.zeros(t_max + 1, dtype=dtype)
    lam[0] = 1.0
    for t in range(1, t_max + 1):
        # w[1..t] against Lambda[t-1..0]
        lam[t] = src[t] + np.dot(w[1 : t + 1], lam[t - 1 :: -1])
    return lam


def lambda_direct(table: StateTable, a: complex, b: complex) -> np.ndarray:
    """``sum_n a^n b^(t-n) Phi_n(t)`` straight from a complete state table."""
    if not table.complete:
        raise ParameterError("direct state-polynomial sum needs a complete state table")
    t = np.arange(table.t_max + 1)
    n = t[:, None]
    expo = t[None, :] - n
    dtype = complex if isinstance(a, complex) or isinstance(b, complex) else float
    weights = np.where(expo >= 0, np.asarray(a, dtype) ** n * np.asarray(b, dtype) ** np.maximum(expo, 0), 0)
    return np.sum(weights * table.probs, axis=0)


def expected_arrivals(table: StateTable) -> np.ndarray:
    """``E[N(t)] = sum_n n Phi_n(t)`` for ``t = 0..t_max``."""
    if not table.complete:
        raise ParameterError("expected arrivals need a complete state table")
    n = np.arange(table.n_max + 1)
    return n @ table.probs
