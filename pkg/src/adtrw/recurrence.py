"""Recurrence, transience and bias of simple walks.

The expected sojourn time (EST) on site ``n`` is the expected total number
of steps an infinitely long walk spends on ``n``. For light-tailed waits it
follows from residues of ``z^n Phi0(z) / (z - g(z))`` with
``g(z) = sum_t psi(t) z^(t-1)``; the truncated sum of return probabilities
is the independent check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from adtrw._conv import power_series_divide
from adtrw.dtrp_core import (
    TailClass,
    WaitingTimeDensity,
    expected_arrivals,
    lambda_poly,
    state_table,
    survival,
    tabulated,
)
from adtrw.errors import ParameterError

RECURRENCE_TOL = 1e-9
# Highest Taylor order taken at z = 0 for sites left of the origin.
MAX_DERIVATIVE_ORDER = 12
UNBIASED_TOL = 1e-10
# Slightly negative coefficients from round-off are clipped up to this size.
NEGATIVE_TOL = 1e-12


class Verdict(enum.Enum):
    RECURRENT = "recurrent"
    TRANSIENT = "transient"


@dataclass
class RunReport:
    """Summary of one density's walk. ``math.inf`` marks divergent quantities."""

    a1: float
    bias_b: float
    verdict: Verdict
    est_origin: float
    escape_prob: float
    asym_slope: float
    r_zero: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict.value
        out["est"] = out.pop("est_origin")
        for key in ("a1", "bias_b", "est"):
            if math.isinf(out[key]):
                out[key] = "inf" if out[key] > 0 else "-inf"
        return out


def _resolve_tail(d: WaitingTimeDensity, assume: TailClass | None) -> TailClass:
    if d.tail is not TailClass.UNKNOWN:
        return d.tail
    if assume is None or assume is TailClass.UNKNOWN:
        raise ParameterError(
            f"{d.name}: tail class unknown; assert light or fat tails explicitly"
        )
    return assume


def mean_wait(d: WaitingTimeDensity, assume: TailClass | None = None) -> float:
    """Expected wait ``A1``; ``math.inf`` for fat tails.

    Built-in families carry the exact value. For a tabulated density asserted
    light-tailed, ``A1`` is the tabulated first moment.
    """
    tail = _resolve_tail(d, assume)
    if tail is TailClass.FAT:
        return math.inf
    if d.mean_wait is not None:
        return d.mean_wait
    t = np.arange(1, d.horizon + 1)
    return math.fsum(t * d.probs)


def _light_a1(d, assume):
    a1 = mean_wait(d, assume)
    if math.isinf(a1):
        raise ParameterError(f"{d.name}: residue formulas need a light-tailed density")
    return a1


def _g_coeffs(d: WaitingTimeDensity) -> np.ndarray:
    """Coefficients of ``g(z) = psi(z) / z``."""
    return d.probs


def _poly_eval(coeffs: np.ndarray, z: float) -> float:
    return float(np.polynomial.polynomial.polyval(z, coeffs))


def find_r_zero(d: WaitingTimeDensity, assume: TailClass | None = None) -> tuple[float, float]:
    """Root ``r`` of ``g(z) = z`` inside ``(0, 1)`` and the slope ``g'(r)``.

    Exists only for ``A1 > 2``. Bisection runs until the bracket stops
    shrinking in double precision.
    """
    a1 = _light_a1(d, assume)
    if a1 <= 2.0:
        raise ParameterError(f"no interior root of g(z) = z for A1 = {a1} <= 2")
    g = _g_coeffs(d)
    dg = np.polynomial.polynomial.polyder(g)
    lo, hi = 0.0, 1.0 - 1e-12
    if _poly_eval(g, lo) <= 0.0:
        return 0.0, _poly_eval(dg, 0.0)
    if _poly_eval(g, hi) - hi >= 0.0:
        raise ParameterError("g(z) - z does not change sign on (0, 1); horizon too short?")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _poly_eval(g, mid) - mid > 0.0:
            lo = mid
        else:
            hi = mid
    r = lo if abs(_poly_eval(g, lo) - lo) <= abs(_poly_eval(g, hi) - hi) else hi
    slope = _poly_eval(dg, r)
    if not slope < 1.0:
        raise ArithmeticError(f"g'(r) = {slope} is not below 1")
    return r, slope


def _survival_gf(d: WaitingTimeDensity, z: float) -> float:
    """``Phi0(z) = sum_t S(t) z^t`` for ``0 <= z < 1``, truncated at the horizon."""
    return _poly_eval(survival(d), z)


def _origin_residue(d: WaitingTimeDensity, n: int) -> float:
    """Taylor coefficient ``|n| - 1`` of ``Phi0(z) / (z - g(z))`` at ``z = 0``."""
    order = abs(n) - 1
    if order > MAX_DERIVATIVE_ORDER:
        raise ParameterError(
            f"site {n}: z=0 residue needs derivative order {order} > {MAX_DERIVATIVE_ORDER}"
        )
    if d.alpha1 == 0.0:
        raise ParameterError("z=0 residue needs psi(1) > 0")
    s = survival(d)[: order + 1]
    den = np.zeros(order + 2)
    den[1] = 1.0
    g = _g_coeffs(d)[: order + 2]
    den[: g.shape[0]] -= g
    return float(power_series_divide(s, den, order)[order])


def est_lt(
    d: WaitingTimeDensity,
    n: int = 0,
    assume: TailClass | None = None,
    recurrence_tol: float = RECURRENCE_TOL,
) -> float:
    """EST on site ``n`` by residues; ``math.inf`` when ``|A1 - 2| < recurrence_tol``."""
    a1 = _light_a1(d, assume)
    if abs(a1 - 2.0) < recurrence_tol:
        return math.inf
    if a1 < 2.0:
        value = a1 / (2.0 - a1)
    else:
        r, slope = find_r_zero(d, assume)
        value = r**n * _survival_gf(d, r) / (1.0 - slope) if n >= 0 or r > 0 else 0.0
    if n < 0:
        value += _origin_residue(d, n)
    return value


def return_series(d: WaitingTimeDensity, n: int, t_max: int) -> np.ndarray:
    """``P(Y_t = n)`` for ``t = 0..t_max``."""
    if t_max > d.horizon:
        raise ParameterError(f"t_max={t_max} exceeds the density horizon {d.horizon}")
    t = np.arange(t_max + 1)
    k2 = n + t
    valid = (k2 % 2 == 0) & (k2 >= 0) & (k2 <= 2 * t)
    n_max = min(t_max, max(0, (n + t_max) // 2))
    table = state_table(d, t_max, n_max=n_max)
    out = np.zeros(t_max + 1)
    k = k2[valid] // 2
    keep = k <= table.n_max
    out[t[valid][keep]] = table.probs[k[keep], t[valid][keep]]
    return out


def est_partial_sums(d: WaitingTimeDensity, n: int, t_max: int) -> np.ndarray:
    """Running sums ``sum_{s <= t} P(Y_s = n)`` for ``t = 0..t_max``."""
    return np.cumsum(return_series(d, n, t_max))


def est_numeric(d: WaitingTimeDensity, n: int, t_max: int) -> float:
    """EST on site ``n`` truncated at ``t_max`` steps."""
    return float(math.fsum(return_series(d, n, t_max)))


def escape_and_return(d: WaitingTimeDensity, assume: TailClass | None = None) -> tuple[float, float]:
    """``(F00, F0n)``: return probability to the origin and visit probability of ``n >= 1``.

    Valid for ``1 <= A1 <= 2`` only.
    """
    a1 = _light_a1(d, assume)
    if a1 > 2.0:
        raise ParameterError(f"return probabilities are given for 1 <= A1 <= 2 only, got {a1}")
    return 2.0 * (a1 - 1.0) / a1, 1.0


def asymptotic_slope(d: WaitingTimeDensity, assume: TailClass | None = None) -> float:
    """Large-``t`` limit of ``E[Y_t] / t``: ``(2 - A1) / A1``, and ``-1`` for fat tails."""
    a1 = mean_wait(d, assume)
    return -1.0 if math.isinf(a1) else (2.0 - a1) / a1


def expected_position(d: WaitingTimeDensity, t_max: int) -> np.ndarray:
    """Exact ``E[Y_t] = 2 E[N(t)] - t`` for ``t = 0..t_max``."""
    return 2.0 * expected_arrivals(state_table(d, t_max)) - np.arange(t_max + 1)


@dataclass
class BiasInversion:
    """Outcome of turning a prescribed ``E[Y_t]`` into a waiting-time density."""

    admissible: bool
    message: str
    coefficients: np.ndarray | None = None
    first_bad_t: int | None = None

    @property
    def density(self) -> WaitingTimeDensity:
        if not self.admissible:
            raise ParameterError(self.message)
        return tabulated(self.coefficients)


def invert_bias(f_values) -> BiasInversion:
    """Waiting-time density whose walk has ``E[Y_t] = f(t)``, with a report.

    ``C(t) = (f(t) + t) / 2`` must be non-negative, non-decreasing and at most
    ``t``. With ``c_j = C(j+1) - 2 C(j) + C(j-1)``, the density has generating
    function ``u c(u) / (1 - u + u c(u))``, expanded by series division.
    """
    f = np.asarray(list(f_values), dtype=float)
    if f.ndim != 1 or f.size == 0:
        return BiasInversion(False, "need at least one value f(1)")
    t = np.arange(1, f.size + 1)
    c_cum = np.concatenate(([0.0], 0.5 * (f + t)))
    tol = NEGATIVE_TOL
    checks = (
        (c_cum[1:] < -tol, "C(t) = (f(t) + t)/2 is negative"),
        (np.diff(c_cum) < -tol, "C(t) decreases"),
        (c_cum[1:] > t + tol, "C(t) exceeds t"),
    )
    for bad, what in checks:
        if bad.any():
            first = int(np.argmax(bad)) + 1
            return BiasInversion(False, f"inadmissible f: {what} at t={first}", first_bad_t=first)
    padded = np.concatenate(([0.0], c_cum, [0.0]))
    # c_j for j = 0..T-1, with C(-1) = 0
    c = padded[2:-1] - 2.0 * padded[1:-2] + padded[:-3]
    order = f.size
    num = np.concatenate(([0.0], c))
    den = np.concatenate(([1.0, -1.0], np.zeros(order)))
    den[1 : 1 + c.size] += c
    psi = power_series_divide(num, den, order)[1:]
    if np.any(psi < -tol):
        first = int(np.argmax(psi < -tol)) + 1
        return BiasInversion(
            False, f"f yields a negative waiting-time probability at t={first}", psi, first
        )
    psi = np.maximum(psi, 0.0)
    if math.fsum(psi) > 1.0 + tol:
        first = int(np.argmax(np.cumsum(psi) > 1.0 + tol)) + 1
        return BiasInversion(False, f"partial sums exceed 1 at t={first}", psi, first)
    return BiasInversion(True, "admissible", psi)


def density_from_bias(f_values) -> WaitingTimeDensity:
    """Density for a prescribed expected position; raises on inadmissible input."""
    return invert_bias(f_values).density


def _exchange_pairs():
    phases = np.linspace(0.1, 3.0, 7)
    radii = (1.0, 0.7, 0.3)
    pairs = [(0.9, 0.2), (0.5, 1.0), (-0.4, 0.8)]
    for k, ph in enumerate(phases):
        ra, rb = radii[k % 3], radii[(k + 1) % 3]
        pairs.append((ra * complex(np.cos(ph), np.sin(ph)), rb * complex(np.cos(2 * ph), -np.sin(2 * ph))))
    return pairs


def unbiased_deviation(d: WaitingTimeDensity, t_max: int) -> tuple[float, float]:
    """``(max_t |E[Y_t]|, max |Lambda(a,b,t) - Lambda(b,a,t)|)`` over ``t <= t_max``."""
    drift = float(np.max(np.abs(expected_position(d, t_max))))
    asym = 0.0
    for a, b in _exchange_pairs():
        diff = lambda_poly(d, a, b, t_max) - lambda_poly(d, b, a, t_max)
        asym = max(asym, float(np.max(np.abs(diff))))
    return drift, asym


def strict_unbiased_check(d: WaitingTimeDensity, t_max: int, tol: float = UNBIASED_TOL) -> bool:
    """True iff ``E[Y_t] = 0`` for all ``t <= t_max`` and ``Lambda`` is symmetric in ``(a, b)``."""
    drift, asym = unbiased_deviation(d, t_max)
    return drift < tol and asym < tol


def analyze(
    d: WaitingTimeDensity,
    assume: TailClass | None = None,
    recurrence_tol: float = RECURRENCE_TOL,
) -> RunReport:
    tail = _resolve_tail(d, assume)
    notes = []
    if d.tail_mass > 0.0 and d.tail is TailClass.UNKNOWN:
        notes.append(f"tabulated density is defective by {d.tail_mass:.3e}")
    a1 = mean_wait(d, assume)
    slope = asymptotic_slope(d, assume)
    if tail is TailClass.FAT:
        est = _fat_tail_est(d, notes)
        return RunReport(math.inf, -math.inf, Verdict.TRANSIENT, est, 1.0 / est, slope, None, notes)
    est = est_lt(d, 0, assume, recurrence_tol)
    r_zero = None
    if math.isinf(est):
        verdict, escape = Verdict.RECURRENT, 0.0
    else:
        verdict, escape = Verdict.TRANSIENT, 1.0 / est
        if a1 > 2.0:
            r_zero = find_r_zero(d, assume)[0]
    return RunReport(a1, 2.0 - a1, verdict, est, escape, slope, r_zero, notes)


def _fat_tail_est(d: WaitingTimeDensity, notes: list[str]) -> float:
    if d.name.startswith("sibuya"):
        from adtrw.sibuya import sibuya_est_origin

        return sibuya_est_origin(d.params["beta"])
    notes.append(f"fat-tailed EST truncated at t={d.horizon}")
    return est_numeric(d, 0, d.horizon)


def site_table(
    d: WaitingTimeDensity,
    sites,
    t_max: int,
    assume: TailClass | None = None,
    recurrence_tol: float = RECURRENCE_TOL,
) -> list[tuple[int, float, float]]:
    """Rows ``(site, exact EST, truncated-sum EST)``.

    The exact entry comes from residues for light tails and from the Sibuya
    quadrature on the origin; it is NaN for every other fat-tailed case.
    """
    tail = _resolve_tail(d, assume)
    rows = []
    for n in sites:
        exact = math.nan
        if tail is TailClass.LIGHT:
            exact = est_lt(d, n, assume, recurrence_tol)
        elif n == 0 and d.name.startswith("sibuya"):
            exact = _fat_tail_est(d, [])
        rows.append((int(n), exact, est_numeric(d, n, t_max)))
    return rows
