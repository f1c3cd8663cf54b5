"""Sharded Monte Carlo for discrete-time and time-changed walks.

The ensemble is cut into fixed-size shards. Shard ``i`` draws from its own
generator seeded by ``SeedSequence(seed, spawn_key=(i,))`` and produces
integer counts only, so merging is exact addition and the result does not
depend on how many threads ran the shards or in which order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from adtrw._kernels import actrw_kernel, guide_table, walk_kernel
from adtrw.dtrp_core import WaitingTimeDensity
from adtrw.errors import ParameterError
from adtrw.walk import Direction, JumpDensity, LatticeDistribution

# Cells (samples x steps) per shard; keeps a shard's working set near 100 MB.
SHARD_CELLS = 1 << 22
MAX_SHARD = 1 << 16


def thread_count() -> int:
    raw = os.environ.get("ADTRW_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"ADTRW_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ParameterError("ADTRW_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def shard_layout(n_samples: int, steps: int) -> list[int]:
    """Shard sizes; a function of ``(n_samples, steps)`` only."""
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    size = max(1, min(MAX_SHARD, SHARD_CELLS // max(steps, 1)))
    full, rest = divmod(n_samples, size)
    return [size] * full + ([rest] if rest else [])


def shard_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(index,)))


@dataclass
class McEnsemble:
    """Merged Monte Carlo output.

    ``position_counts[k]`` is the position histogram at ``times[k]`` on the
    sites ``position_offset + j``. ``success_counts[k, n]`` counts samples
    with ``n`` generator successes by ``times[k]``; ``trial_counts`` does the
    same for clock arrivals (time-changed walks only).
    """

    sample_count: int
    seed: int
    shard_sizes: list[int]
    times: np.ndarray
    position_offset: int
    position_counts: np.ndarray
    success_counts: np.ndarray
    mean_times: np.ndarray
    position_sums: np.ndarray
    first_return_counts: np.ndarray | None = None
    never_returned: int = 0
    trial_counts: np.ndarray | None = None
    truncated: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def shard_count(self) -> int:
        return len(self.shard_sizes)

    @property
    def mean_position(self) -> np.ndarray:
        return self.position_sums / self.sample_count

    def _time_index(self, t) -> int:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))
        if hits.size == 0:
            raise ParameterError(f"time {t} was not recorded; recorded times: {self.times.tolist()}")
        return int(hits[0])

    def distribution(self, t) -> LatticeDistribution:
        counts = self.position_counts[self._time_index(t)]
        return LatticeDistribution(int(round(t)), self.position_offset, counts / self.sample_count)

    def success_distribution(self, t) -> np.ndarray:
        return self.success_counts[self._time_index(t)] / self.sample_count

    def trial_distribution(self, t) -> np.ndarray:
        if self.trial_counts is None:
            raise ParameterError("no clock counts recorded for a discrete-time ensemble")
        return self.trial_counts[self._time_index(t)] / self.sample_count

    def first_return_frequency(self) -> float:
        if self.first_return_counts is None:
            raise ParameterError("first returns were not tracked")
        return float(self.first_return_counts.sum()) / self.sample_count

    def summary(self) -> dict:
        out = {
            "sample_count": self.sample_count,
            "seed": self.seed,
            "shard_count": self.shard_count,
            "shard_size": self.shard_sizes[0],
            "truncation_count": self.truncated,
            "mean_position": {"times": self.mean_times.tolist(), "values": self.mean_position.tolist()},
        }
        if self.first_return_counts is not None:
            out["first_return"] = {
                "returned": int(self.first_return_counts.sum()),
                "never_returned_within_horizon": self.never_returned,
                "counts_by_time": self.first_return_counts.tolist(),
            }
        out.update(self.meta)
        return out


def _cdf(probs: np.ndarray) -> np.ndarray:
    return np.minimum(np.cumsum(probs), 1.0)


def _tables(d: WaitingTimeDensity, wplus: JumpDensity, wminus: JumpDensity):
    """Guided inverse-CDF tables for waits and both jump laws."""
    out = []
    for probs, closed in ((d.probs, False), (wplus.probs, True), (wminus.probs, True)):
        cdf = _cdf(probs)
        if closed:
            cdf[-1] = 1.0
        out += [cdf, guide_table(cdf)]
    return out


def _run_shards(worker, sizes, seed):
    threads = min(thread_count(), len(sizes))
    jobs = [(i, n, shard_rng(seed, i)) for i, n in enumerate(sizes)]
    if threads <= 1:
        return [worker(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: worker(*job), jobs))


def _check_common(wplus, wminus, n_samples):
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if wplus.direction is not Direction.POSITIVE or wminus.direction is not Direction.NEGATIVE:
        raise ParameterError("wplus must point right and wminus left")


def mc_sample(
    d: WaitingTimeDensity,
    wplus: JumpDensity,
    wminus: JumpDensity,
    t_max: int,
    n_samples: int,
    seed: int,
    record_times=None,
    track_first_return: bool = True,
    stop_at_return: bool = False,
) -> McEnsemble:
    """Simulate ``n_samples`` discrete-time walks for ``t_max`` steps.

    Histograms are kept at ``record_times`` (every step when ``t_max <= 256``,
    otherwise only ``t_max``); the mean-position series covers every step.
    Waits are drawn by inverse CDF on the tabulated density. A draw landing
    in the untabulated tail stops further successes for that walk and is
    counted in ``truncated`` whenever it could have ended inside the run.

    With ``stop_at_return`` each walk ends at its first return to the
    origin. Only the first-return counts are then meaningful, and no
    position histograms are kept.
    """
    _check_common(wplus, wminus, n_samples)
    if t_max < 0:
        raise ParameterError("t_max must be non-negative")
    if stop_at_return:
        if not track_first_return:
            raise ParameterError("stop_at_return needs track_first_return")
        if record_times:
            raise ParameterError("stop_at_return keeps no position histograms")
        record_times = [0]
    elif record_times is None:
        record_times = range(t_max + 1) if t_max <= 256 else [t_max]
    times = np.array(sorted(set(int(t) for t in record_times)), dtype=np.int64)
    if times.size == 0 or times[0] < 0 or times[-1] > t_max:
        raise ParameterError(f"record times must lie in [0, {t_max}]")
    rec_index = np.full(t_max + 1, -1, dtype=np.int64)
    rec_index[times] = np.arange(times.size)
    lo, hi = -wminus.max_jump * t_max, wplus.max_jump * t_max
    width = hi - lo + 1
    sizes = shard_layout(n_samples, t_max)
    tables = _tables(d, wplus, wminus)
    unit = wplus.is_unit and wminus.is_unit

    def worker(index, n, rng):
        pos_counts = np.zeros((times.size, width), dtype=np.int64)
        succ_counts = np.zeros((times.size, t_max + 1), dtype=np.int64)
        sums = np.zeros(t_max + 1, dtype=np.int64)
        first = np.zeros(t_max + 1, dtype=np.int64)
        never, truncated = walk_kernel(
            rng, n, t_max, *tables, unit, rec_index, lo,
            pos_counts, succ_counts, sums, first, track_first_return, stop_at_return,
        )
        return pos_counts, succ_counts, sums, first, never, truncated

    parts = _run_shards(worker, sizes, seed)
    mean_times = np.arange(0 if stop_at_return else t_max + 1)
    return McEnsemble(
        sample_count=n_samples,
        seed=seed,
        shard_sizes=sizes,
        times=times,
        position_offset=lo,
        position_counts=sum(p[0] for p in parts),
        success_counts=sum(p[1] for p in parts),
        mean_times=mean_times,
        position_sums=sum(p[2] for p in parts)[: mean_times.size],
        first_return_counts=sum(p[3] for p in parts) if track_first_return else None,
        never_returned=sum(p[4] for p in parts) if track_first_return else 0,
        truncated=sum(p[5] for p in parts),
        meta={"stopped_at_first_return": True} if stop_at_return else {},
    )


def ml_variates(rng, mu: float, xi0: float, shape) -> np.ndarray:
    """Mittag-Leffler waiting times with survival ``E_mu(-xi0 t^mu)``.

    Two-uniform transformation
    ``xi0^(-1/mu) (-ln U) [sin(mu pi)/tan(mu pi V) - cos(mu pi)]^(1/mu)``;
    at ``mu = 1`` it reduces to exponential waits with rate ``xi0``.
    """
    u = rng.random(shape)
    expo = -np.log1p(-u)
    if mu == 1.0:
        return expo / xi0
    v = 1.0 - rng.random(shape)
    ratio = np.sin(mu * np.pi) / np.tan(mu * np.pi * v) - np.cos(mu * np.pi)
    return xi0 ** (-1.0 / mu) * expo * ratio ** (1.0 / mu)


def actrw_sample(
    d: WaitingTimeDensity,
    mu: float,
    xi0: float,
    wplus: JumpDensity,
    wminus: JumpDensity,
    record_times,
    n_samples: int,
    seed: int,
) -> McEnsemble:
    """Simulate the time-changed walk ``Y_{M(t)}`` at continuous ``record_times``.

    Each clock arrival triggers one generator trial and hence one jump.
    """
    _check_common(wplus, wminus, n_samples)
    if not 0.0 < mu <= 1.0 or not xi0 > 0.0:
        raise ParameterError(f"clock needs mu in (0, 1] and xi0 > 0, got mu={mu}, xi0={xi0}")
    times = np.array(sorted(set(float(t) for t in record_times)))
    if times.size == 0 or times[0] < 0:
        raise ParameterError("record times must be non-negative")
    sizes = shard_layout(n_samples, times.size)
    tables = _tables(d, wplus, wminus)
    unit = wplus.is_unit and wminus.is_unit

    def worker(index, n, rng):
        pos = np.zeros((n, times.size), dtype=np.int64)
        succ = np.zeros((n, times.size), dtype=np.int64)
        trials = np.zeros((n, times.size), dtype=np.int64)
        truncated = actrw_kernel(
            rng, n, times, mu, xi0, *tables, unit, pos, succ, trials,
        )
        return pos, succ, trials, truncated

    parts = _run_shards(worker, sizes, seed)
    pos = np.concatenate([p[0] for p in parts])
    succ = np.concatenate([p[1] for p in parts])
    trials = np.concatenate([p[2] for p in parts])
    lo = int(pos.min(initial=0))
    width = int(pos.max(initial=0)) - lo + 1
    m_width = int(trials.max(initial=0)) + 1
    cols = range(times.size)
    return McEnsemble(
        sample_count=n_samples,
        seed=seed,
        shard_sizes=sizes,
        times=times,
        position_offset=lo,
        position_counts=np.stack([np.bincount(pos[:, k] - lo, minlength=width) for k in cols]),
        success_counts=np.stack([np.bincount(succ[:, k], minlength=m_width) for k in cols]),
        mean_times=times,
        position_sums=pos.sum(axis=0),
        trial_counts=np.stack([np.bincount(trials[:, k], minlength=m_width) for k in cols]),
        truncated=sum(p[3] for p in parts),
        meta={"clock": {"mu": mu, "xi0": xi0}},
    )
