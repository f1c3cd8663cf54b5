"""The Sibuya walk: fat-tailed waits ``psi(k) = (-1)^(k-1) binom(beta, k)``.

Closed forms cover the mean number of arrivals, the expected position and
(for short times) the state probabilities. Return probabilities and the
state polynomial come from the positive-term convolution route, and the
EST on the origin from a quadrature with the weak singularity at
``phi = 0`` removed analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate

from adtrw._conv import iter_convolution_powers
from adtrw.dtrp_core import WaitingTimeDensity, lambda_poly, sibuya, survival, trivial
from adtrw.errors import EnvelopeError, ParameterError

EXACT_STATE_CAP = 60
DEFAULT_SPLIT = 0.1
# Above this the substitution exponent 1/(1 - beta) underflows phi on most of the range.
EST_BETA_MAX = 0.99
FIG1_V = 0.1
FIG1_T_MAX = 10_000


@dataclass(frozen=True)
class SibuyaParams:
    """Sibuya index ``beta`` in ``(0, 1]``; ``beta = 1`` is the always-success limit."""

    beta: float

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"sibuya beta must lie in (0, 1], got {self.beta}")

    def density(self, horizon: int) -> WaitingTimeDensity:
        return trivial(horizon) if self.beta == 1.0 else sibuya(self.beta, horizon)


def _params(p) -> SibuyaParams:
    return p if isinstance(p, SibuyaParams) else SibuyaParams(float(p))


def sibuya_state_exact(p, t: int, cap: int = EXACT_STATE_CAP) -> np.ndarray:
    """``P(N(t) = n)`` for ``n = 0..t`` from the alternating binomial sum.

    ``sum_l (-1)^l C(n, l) C(t - beta (l + 1), t)``. The terms cancel
    heavily, so the sum runs in extended precision and only up to ``cap``.
    """
    p = _params(p)
    if t < 0:
        raise ParameterError("t must be non-negative")
    if t > cap:
        raise ParameterError(f"t={t} exceeds the alternating-sum cap {cap}; use state_table")
    beta = mpmath.mpf(p.beta)
    with mpmath.workdps(30 + 2 * t):
        inner = [mpmath.binomial(t - beta * (l + 1), t) for l in range(t + 1)]
        out = [
            mpmath.fsum((-1) ** l * mpmath.binomial(n, l) * inner[l] for l in range(n + 1))
            for n in range(t + 1)
        ]
        return np.array([float(x) for x in out])


# Falling-factorial products are used up to this time, log-Gamma beyond.
PRODUCT_CAP = 64


def _binom_excess(beta: float, t) -> np.ndarray:
    """``C(beta + t, t) - 1``.

    Integer ``t <= 64`` uses the product ``prod_k (1 + beta/k)``, exact to a
    few ulps; other times go through ``lgamma``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("t must be non-negative")
    k = np.arange(1, PRODUCT_CAP + 1, dtype=float)
    prod = np.concatenate(([1.0], np.cumprod(1.0 + beta / k)))
    small = (t == np.round(t)) & (t <= PRODUCT_CAP)
    lg = np.vectorize(math.lgamma, otypes=[float])
    big = np.where(small, PRODUCT_CAP + 1.0, t)
    via_gamma = np.expm1(lg(beta + big + 1.0) - math.lgamma(beta + 1.0) - lg(big + 1.0))
    via_prod = prod[np.where(small, t, 0).astype(np.int64)] - 1.0
    return np.where(small, via_prod, via_gamma)


def sibuya_mean_arrivals(p, t):
    """``E[N(t)] = C(beta + t, t) - 1``."""
    p = _params(p)
    out = _binom_excess(p.beta, t)
    return float(out) if np.ndim(out) == 0 else out


def sibuya_expected_position(p, t):
    """``E[Y_t] = 2 C(beta + t, t) - 2 - t``."""
    p = _params(p)
    out = 2.0 * _binom_excess(p.beta, t) - np.asarray(t, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def sibuya_return_series(p, t_max: int) -> np.ndarray:
    """``P(Y_t = 0)`` for ``t = 0..t_max``; zero at odd ``t``.

    Streams the state-table rows so memory stays ``O(t_max)``.
    """
    p = _params(p)
    if t_max < 0:
        raise ParameterError("t_max must be non-negative")
    d = p.density(max(t_max, 1))
    seed = survival(d)[: t_max + 1]
    out = np.zeros(t_max + 1)
    rows = iter_convolution_powers(seed, d.padded, t_max // 2)
    for n, row in enumerate(rows):
        out[2 * n] = row[2 * n]
    return out


def sibuya_return_prob(p, t: int) -> float:
    if t < 0:
        raise ParameterError("t must be non-negative")
    if t % 2:
        return 0.0
    return float(sibuya_return_series(p, t)[t])


def _integrand(phi, beta):
    """``Re[z (1-z)^(beta-1) / (2i sin(phi) + (1-z)^beta / z)]`` at ``z = e^(i phi)``.

    Written as ``z^2/(1-z) * 1/(1 + x)`` so the ``1/phi`` imaginary part never
    has to cancel in floating point.
    """
    half = 0.5 * phi
    w = -2j * np.sin(half) * np.exp(1j * half)
    x = 2j * np.sin(phi) * np.exp(1j * phi) * w ** (-beta)
    norm = (1.0 + x.real) ** 2 + x.imag**2
    re_g, im_g = (1.0 + x.real) / norm, -x.imag / norm
    # z^2/(1-z) = z/(1-z) - z, with z/(1-z) = -1/2 + (i/2) cot(phi/2)
    re_a = -0.5 - np.cos(phi)
    im_a = 0.5 / np.tan(half) - np.sin(phi)
    return re_a * re_g - im_a * im_g


def _singular_part(phi, beta):
    return 2.0 * phi ** (-beta) * math.cos(math.pi * beta / 2.0)


def sibuya_est_origin(p, split: float = DEFAULT_SPLIT) -> float:
    """EST on the departure site, by quadrature over ``phi`` in ``[0, pi]``.

    On ``[0, split]`` the ``phi^-beta`` part of the integrand is integrated in
    closed form and only the bounded remainder goes to quadrature. The
    ``1/2`` accounts for the point mass the regularized pole at ``phi = 0``
    leaves behind as the generating-function argument tends to one.
    """
    p = _params(p)
    beta = p.beta
    if beta >= 1.0:
        raise ParameterError("EST quadrature needs beta < 1 (beta = 1 walks straight right)")
    if beta > EST_BETA_MAX:
        raise EnvelopeError(f"EST quadrature is validated for beta <= {EST_BETA_MAX}, got {beta}")
    if not 0.0 < split < math.pi:
        raise ParameterError("split point must lie in (0, pi)")
    closed = 2.0 * split ** (1.0 - beta) * math.cos(math.pi * beta / 2.0) / (1.0 - beta)
    # phi = s^m turns the leftover powers of phi^(1 - beta) into integer powers of s
    m = 1.0 / (1.0 - beta)

    def remainder(s):
        phi = s**m
        if phi < 1e-200:
            # the transformed remainder vanishes linearly in s here
            return 0.0
        return (_integrand(phi, beta) - _singular_part(phi, beta)) * m * s ** (m - 1.0)

    near, _ = integrate.quad(remainder, 0.0, split ** (1.0 - beta), epsabs=1e-13, epsrel=1e-12, limit=200)
    far, _ = integrate.quad(_integrand, split, math.pi, args=(beta,), epsabs=1e-13, epsrel=1e-12, limit=200)
    return 0.5 + (closed + near + far) / math.pi


def singular_ratio(phi: float, beta: float) -> float:
    """Integrand over its leading small-``phi`` form; tends to 1 as ``phi -> 0``."""
    return float(_integrand(phi, beta) / _singular_part(phi, beta))


def sibuya_figures(betas, fig, t_max: int | None = None) -> list[tuple]:
    """Figure data rows.

    * ``fig=1``: ``(beta, t, P(v=0.1, t))``, the state polynomial at ``v = 0.1``
    * ``fig=2``: ``(beta, t, P00(t))`` for even ``t``
    * ``fig=3``: ``(beta, t, E[Y_t])``
    * ``fig="est"``: ``(beta, EST at the origin)``
    """
    params = [_params(b) for b in betas]
    fig = str(fig)
    if fig not in ("1", "2", "3", "est"):
        raise ParameterError(f"unknown figure {fig!r}; choose 1, 2, 3 or est")
    if fig == "est":
        return [(p.beta, sibuya_est_origin(p)) for p in params]
    t_max = FIG1_T_MAX if t_max is None else t_max
    if t_max < 0:
        raise ParameterError("t_max must be non-negative")
    rows = []
    t = np.arange(t_max + 1)
    for p in params:
        if fig == "1":
            values = lambda_poly(p.density(max(t_max, 1)), FIG1_V, 1.0, t_max)
            rows += [(p.beta, int(k), float(v)) for k, v in zip(t, values)]
        elif fig == "2":
            values = sibuya_return_series(p, t_max)
            rows += [(p.beta, int(k), float(values[k])) for k in t[::2]]
        else:
            values = sibuya_expected_position(p, t)
            rows += [(p.beta, int(k), float(v)) for k, v in zip(t, values)]
    return rows
