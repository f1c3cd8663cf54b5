"""Executable acceptance suite.

Each criterion is a function returning ``(passed, detail)``; :func:`run_all`
times them and folds the runtime budget into the verdict. The CLI ``verify``
subcommand and the test suite share these definitions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc

from adtrw.actrw import MLParams, mittag_leffler, pi_geometric_closed, pi_series
from adtrw.bell import incomplete_bell
from adtrw.dtrp_core import expected_arrivals, geometric, shifted_poisson, sibuya, state_table
from adtrw.mc import mc_sample
from adtrw.recurrence import (
    density_from_bias,
    est_lt,
    est_numeric,
    est_partial_sums,
    expected_position,
    strict_unbiased_check,
)
from adtrw.sibuya import sibuya_est_origin, sibuya_expected_position, sibuya_return_series
from adtrw.walk import Direction, JumpDensity, simple_walk_dist


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float | None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g} s)" if self.budget else ""
        return f"[{status}] {self.number:2d} {self.name}: {self.detail}; {self.seconds:.2f} s{budget}"


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    check: Callable[[], tuple[bool, str]]
    budget: float | None = None

    def run(self) -> CriterionResult:
        start = time.perf_counter()
        try:
            ok, detail = self.check()
        except Exception as exc:  # a crash is a failed criterion, not a crashed suite
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        if self.budget is not None and elapsed >= self.budget:
            ok, detail = False, f"{detail}; over the runtime budget"
        return CriterionResult(self.number, self.name, ok, detail, elapsed, self.budget)


def _unit_jumps():
    return JumpDensity.unit(Direction.POSITIVE), JumpDensity.unit(Direction.NEGATIVE)


def bernoulli_est() -> tuple[bool, str]:
    worst = 0.0
    for p in (0.55, 0.6, 0.7, 0.9, 0.3, 0.1):
        d = geometric(p, 1024)
        worst = max(worst, abs(est_lt(d, 0) - 1.0 / abs(2.0 * p - 1.0)))
    return worst < 1e-12, f"max |est - 1/|p-q|| = {worst:.3e}"


def residue_vs_sum() -> tuple[bool, str]:
    value = est_numeric(geometric(0.6, 2048), 0, 2048)
    gap = abs(value - 5.0)
    return gap < 1e-3, f"truncated EST {value:.12f}, gap {gap:.3e}"


def recurrent_divergence() -> tuple[bool, str]:
    sums = est_partial_sums(geometric(0.5, 2048), 0, 2048)
    even = sums[::2]
    increasing = bool(np.all(np.diff(even) > 0) and np.all(np.diff(sums) >= 0))
    return increasing and sums[-1] > 20.0, f"partial sum at t=2048 is {sums[-1]:.4f}, increasing={increasing}"


def sibuya_exactness() -> tuple[bool, str]:
    closed = sibuya_expected_position(0.5, 2)
    table = state_table(sibuya(0.5, 2))
    conv = 2.0 * expected_arrivals(table)[2] - 2.0
    ok = abs(closed + 0.25) < 1e-12 and abs(closed - conv) < 1e-10
    return ok, f"closed {closed:.17g}, convolution {float(conv):.17g}"


def sibuya_transience() -> tuple[bool, str]:
    quad = sibuya_est_origin(0.5)
    partial = math.fsum(sibuya_return_series(0.5, 4096))
    gap = abs(quad - partial)
    return math.isfinite(quad) and gap < 0.01, f"quadrature {quad:.10f}, sum to 4096 {partial:.10f}, gap {gap:.3e}"


def universal_scaling() -> tuple[bool, str]:
    beta, t = 0.5, 4096
    table = state_table(sibuya(beta, t), t, n_max=5)
    scale = math.gamma(1.0 - beta) * t**beta
    values = {n: table.probs[n, t] * scale for n in (0, 1, 2, 5)}
    ok = all(0.95 <= v <= 1.05 for v in values.values())
    return ok, ", ".join(f"n={n}: {v:.5f}" for n, v in values.items())


def _partitions(r: int, largest: int | None = None):
    """Integer partitions of ``r`` as non-increasing tuples."""
    largest = r if largest is None else largest
    if r == 0:
        yield ()
        return
    for k in range(min(r, largest), 0, -1):
        for rest in _partitions(r - k, k):
            yield (k,) + rest


def _bell_by_partitions(psi: np.ndarray, r: int, n: int) -> float:
    """Sum over ordered n-part compositions of r, grouped by partition with multinomial weights."""
    total = []
    for part in _partitions(r):
        if len(part) != n:
            continue
        counts = {}
        for k in part:
            counts[k] = counts.get(k, 0) + 1
        weight = math.factorial(n)
        for c in counts.values():
            weight //= math.factorial(c)
        total.append(weight * math.prod(psi[k] for k in part))
    return math.fsum(total)


def bell_oracle() -> tuple[bool, str]:
    worst = 0.0
    for d in (geometric(0.5, 20), sibuya(0.5, 20)):
        table = incomplete_bell(d, 20)
        psi = d.padded
        for r in range(21):
            for n in range(r + 1):
                expected = 1.0 if r == n == 0 else (0.0 if n == 0 else _bell_by_partitions(psi, r, n))
                worst = max(worst, abs(table(r, n) - expected))
    return worst < 1e-12, f"max deviation {worst:.3e}"


def ml_identity() -> tuple[bool, str]:
    rng = np.random.default_rng(20240607)
    pairs = rng.uniform(-1.0, 1.0, size=(20, 2))
    worst = 0.0
    for p in (0.3, 0.7):
        d = geometric(p, 256)
        for mu in (0.6, 0.8, 1.0):
            clock = MLParams(mu, 1.0)
            for t in (0.5, 1.0, 2.0, 5.0):
                for a, b in pairs:
                    diff = abs(pi_series(d, clock, a, b, t) - pi_geometric_closed(p, clock, a, b, t))
                    worst = max(worst, diff)
    return worst < 1e-6, f"max |Pi - E_mu| = {worst:.3e} over 480 grid points"


def ml_oracle() -> tuple[bool, str]:
    half = abs(mittag_leffler(0.5, -1.0) - math.e * erfc(1.0))
    expo = max(abs(mittag_leffler(1.0, z) - math.exp(z)) for z in np.linspace(-10.0, 0.0, 201))
    return half < 1e-10 and expo < 1e-12, f"|E_0.5(-1) - e erfc(1)| = {half:.3e}, max |E_1 - exp| = {expo:.3e}"


def mc_agreement() -> tuple[bool, str]:
    wplus, wminus = _unit_jumps()
    out = []
    ok = True
    for d in (geometric(0.5, 64), sibuya(0.5, 64)):
        ens = mc_sample(d, wplus, wminus, 20, 10**6, seed=20240607)
        tvd = ens.distribution(20).tvd(simple_walk_dist(d, 20))
        ok &= tvd < 0.005
        out.append(f"{d.name} TVD {tvd:.5f}")
    return ok, ", ".join(out)


def escape_probability() -> tuple[bool, str]:
    wplus, wminus = _unit_jumps()
    ens = mc_sample(geometric(0.6, 2048), wplus, wminus, 2048, 10**6, seed=20240607, stop_at_return=True)
    freq = ens.first_return_frequency()
    return abs(freq - 0.8) < 0.003, f"first-return frequency {freq:.6f} (target 0.8)"


def strict_unbiased() -> tuple[bool, str]:
    verdicts = {
        d.name: strict_unbiased_check(d, 64)
        for d in (geometric(0.5, 64), geometric(0.6, 64), sibuya(0.5, 64), shifted_poisson(1.0, 64))
    }
    expected = [True, False, False, False]
    return list(verdicts.values()) == expected, ", ".join(f"{k}: {v}" for k, v in verdicts.items())


def bias_round_trip() -> tuple[bool, str]:
    d = geometric(0.6, 128)
    f = expected_position(d, 128)[1:]
    recovered = density_from_bias(f)
    worst = float(np.max(np.abs(recovered.probs - d.probs)))
    return worst < 1e-10, f"max coefficient error {worst:.3e}"


def asymptotic_slope_check() -> tuple[bool, str]:
    out = []
    ok = True
    for d in (geometric(0.6, 512), shifted_poisson(0.5, 512)):
        a1 = d.mean_wait
        gap = abs(expected_position(d, 512)[512] / 512 - (2.0 - a1) / a1)
        ok &= gap < 0.01
        out.append(f"{d.name} gap {gap:.3e}")
    return ok, ", ".join(out)


CRITERIA = (
    Criterion(1, "Bernoulli EST", bernoulli_est, 1.0),
    Criterion(2, "residue vs truncated sum", residue_vs_sum, 5.0),
    Criterion(3, "recurrent divergence", recurrent_divergence, 5.0),
    Criterion(4, "Sibuya expected position", sibuya_exactness),
    Criterion(5, "Sibuya transience", sibuya_transience, 10.0),
    Criterion(6, "universal fat-tail scaling", universal_scaling, 10.0),
    Criterion(7, "Bell partition oracle", bell_oracle, 5.0),
    Criterion(8, "ACTRW Mittag-Leffler identity", ml_identity, 10.0),
    Criterion(9, "Mittag-Leffler oracle", ml_oracle),
    Criterion(10, "Monte Carlo agreement", mc_agreement, 30.0),
    Criterion(11, "escape probability", escape_probability, 60.0),
    Criterion(12, "strictly unbiased uniqueness", strict_unbiased),
    Criterion(13, "bias inversion round trip", bias_round_trip),
    Criterion(14, "asymptotic slope", asymptotic_slope_check),
)


def run_all(numbers=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for c in CRITERIA:
        if numbers is not None and c.number not in numbers:
            continue
        res = c.run()
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
