"""Compiled trajectory loops for the Monte Carlo samplers.

Each kernel consumes one ``numpy.random.Generator`` (a shard's private
stream) and writes integer tallies into caller-owned arrays.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Pushed-out arrival step for waits beyond the tabulated horizon.
_NEVER = np.iinfo(np.int64).max // 4


def guide_table(cdf):
    """Bucket starts for guided inverse-CDF lookup (one bucket per table entry)."""
    size = cdf.shape[0]
    edges = np.arange(size, dtype=float) / size
    return np.searchsorted(cdf, edges, side="right").astype(np.int64)


@njit(cache=True)
def _draw(rng, cdf, guide):
    """Index ``1..len(cdf)`` by inverse CDF; ``len(cdf) + 1`` means beyond the table."""
    u = rng.random()
    size = cdf.shape[0]
    i = guide[int(u * size)]
    while i < size and cdf[i] <= u:
        i += 1
    return i + 1


@njit(cache=True)
def walk_kernel(
    rng, n, t_max, wait_cdf, wait_guide, plus_cdf, plus_guide, minus_cdf, minus_guide,
    unit_jumps, rec_index, lo, pos_counts, succ_counts, pos_sums, first_counts,
    track_first, stop_at_return,
):
    horizon = wait_cdf.shape[0]
    never = 0
    truncated = 0
    for _ in range(n):
        pos = 0
        n_succ = 0
        returned = False
        w = _draw(rng, wait_cdf, wait_guide)
        if w > horizon:
            # Only a wait that could end inside the run distorts it.
            nxt = _NEVER
            if t_max > horizon:
                truncated += 1
        else:
            nxt = w
        k = rec_index[0]
        if k >= 0:
            pos_counts[k, -lo] += 1
            succ_counts[k, 0] += 1
        for t in range(1, t_max + 1):
            if t == nxt:
                n_succ += 1
                pos += 1 if unit_jumps else _draw(rng, plus_cdf, plus_guide)
                w = _draw(rng, wait_cdf, wait_guide)
                if w > horizon:
                    nxt = _NEVER
                    if t_max > t + horizon:
                        truncated += 1
                else:
                    nxt = t + w
            else:
                pos -= 1 if unit_jumps else _draw(rng, minus_cdf, minus_guide)
            pos_sums[t] += pos
            if track_first and not returned and pos == 0:
                returned = True
                first_counts[t] += 1
                if stop_at_return:
                    break
            k = rec_index[t]
            if k >= 0:
                pos_counts[k, pos - lo] += 1
                succ_counts[k, n_succ] += 1
        if track_first and not returned:
            never += 1
    return never, truncated


@njit(cache=True)
def _ml_wait(rng, mu, scale):
    expo = -np.log1p(-rng.random())
    if mu == 1.0:
        return scale * expo
    v = 1.0 - rng.random()
    ratio = np.sin(mu * np.pi) / np.tan(mu * np.pi * v) - np.cos(mu * np.pi)
    return scale * expo * ratio ** (1.0 / mu)


@njit(cache=True)
def actrw_kernel(
    rng, n, times, mu, xi0, wait_cdf, wait_guide, plus_cdf, plus_guide,
    minus_cdf, minus_guide, unit_jumps, out_pos, out_succ, out_trials,
):
    horizon = wait_cdf.shape[0]
    n_times = times.shape[0]
    scale = xi0 ** (-1.0 / mu)
    truncated = 0
    for i in range(n):
        clock = 0.0
        m = 0
        pos = 0
        n_succ = 0
        w = _draw(rng, wait_cdf, wait_guide)
        nxt = _NEVER if w > horizon else w
        # Step after which a beyond-horizon wait starts to distort the path.
        exposed = horizon if w > horizon else _NEVER
        k = 0
        while k < n_times:
            clock += _ml_wait(rng, mu, scale)
            while k < n_times and times[k] < clock:
                out_pos[i, k] = pos
                out_succ[i, k] = n_succ
                out_trials[i, k] = m
                k += 1
            if k == n_times:
                break
            m += 1
            if m > exposed:
                truncated += 1
                exposed = _NEVER
            if m == nxt:
                n_succ += 1
                pos += 1 if unit_jumps else _draw(rng, plus_cdf, plus_guide)
                w = _draw(rng, wait_cdf, wait_guide)
                if w > horizon:
                    nxt = _NEVER
                    exposed = m + horizon
                else:
                    nxt = m + w
            else:
                pos -= 1 if unit_jumps else _draw(rng, minus_cdf, minus_guide)
    return truncated
