"""Truncated convolution powers on a finite time grid.

All renewal quantities in the package reduce to rows of the form
``row_n = row_{n-1} * psi`` truncated to ``t <= t_max``. Small problems use
exact direct convolution; large ones switch to FFT, which keeps the
per-row cost at ``O(T log T)`` with absolute error near 1e-16 per entry.
"""

from __future__ import annotations

import numpy as np

# Above this many multiply-adds the direct path gets slow in numpy.
_DIRECT_BUDGET = 2e8


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def choose_method(n_rows: int, t_max: int) -> str:
    return "direct" if n_rows * (t_max + 1) ** 2 <= _DIRECT_BUDGET else "fft"


def iter_convolution_powers(
    seed: np.ndarray,
    kernel: np.ndarray,
    n_max: int,
    method: str = "auto",
):
    """Yield rows ``seed * kernel^{*n}`` for ``n = 0..n_max`` on ``t = 0..len(seed)-1``.

    ``kernel`` is indexed by time with ``kernel[0] == 0`` (no zero-length
    waits), so row ``n`` vanishes for ``t < n``; that structural zero is
    enforced exactly on both paths. Only one row is held at a time.
    """
    seed = np.asarray(seed)
    t_len = seed.shape[0]
    kern = np.zeros(t_len, dtype=np.result_type(kernel, float))
    k = min(t_len, len(kernel))
    kern[:k] = kernel[:k]
    if method == "auto":
        method = choose_method(n_max + 1, t_len - 1)
    if method not in ("direct", "fft"):
        raise ValueError(f"unknown convolution method {method!r}")
    row = seed.astype(np.result_type(seed, kern))
    yield row
    if method == "fft":
        nfft = _next_pow2(2 * t_len)
        real = not np.iscomplexobj(row)
        fwd, inv = (np.fft.rfft, np.fft.irfft) if real else (np.fft.fft, np.fft.ifft)
        kf = fwd(kern, nfft)
    for n in range(1, n_max + 1):
        if method == "direct":
            row = np.convolve(row, kern)[:t_len]
        else:
            row = inv(fwd(row, nfft) * kf, nfft)[:t_len]
            if real:
                # FFT round-off can leave tiny negative values in probability rows.
                np.maximum(row, 0.0, out=row)
        row[: min(n, t_len)] = 0.0
        yield row


def convolution_powers(
    seed: np.ndarray,
    kernel: np.ndarray,
    n_max: int,
    method: str = "auto",
) -> np.ndarray:
    """All rows of :func:`iter_convolution_powers` stacked into ``(n_max + 1, len(seed))``."""
    seed = np.asarray(seed)
    out = np.zeros((n_max + 1, seed.shape[0]), dtype=np.result_type(seed, kernel, float))
    for n, row in enumerate(iter_convolution_powers(seed, kernel, n_max, method)):
        out[n] = row
    return out


def power_series_divide(num: np.ndarray, den: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients ``0..order`` of ``num(z) / den(z)``; needs ``den[0] != 0``."""
    num = np.asarray(num)
    den = np.asarray(den)
    if den.shape[0] == 0 or den[0] == 0:
        raise ZeroDivisionError("constant term of the divisor vanishes")
    dtype = np.result_type(num, den, float)
    n = np.zeros(order + 1, dtype=dtype)
    d = np.zeros(order + 1, dtype=dtype)
    n[: min(order + 1, len(num))] = num[: order + 1]
    d[: min(order + 1, len(den))] = den[: order + 1]
    q = np.zeros(order + 1, dtype=dtype)
    for k in range(order + 1):
        acc = n[k] - np.dot(d[1 : k + 1], q[k - 1 :: -1][:k]) if k else n[0]
        q[k] = acc / d[0]
    return q
