"""Small statistical helpers shared by experiments and self-checks."""

from __future__ import annotations

import numpy as np

from rcm.pointprocess import RngStream


def draw_without_replacement(rng, n: int, k: int) -> np.ndarray:
    """k distinct uniform integers from [0, n), ascending.

    Rejection for small k, a permutation slice otherwise; either way the
    result is a fixed function of the generator state.
    """
    if not (0 <= k <= n):
        raise ValueError("need 0 <= k <= n")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if k * 3 >= n:
        return np.sort(rng.permutation(n)[:k].astype(np.int64))
    picked: set[int] = set()
    while len(picked) < k:
        for v in rng.integers(0, n, size=k - len(picked)):
            picked.add(int(v))
    return np.array(sorted(picked), dtype=np.int64)


def linear_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line through (x, y): returns slope, intercept, r2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two equal-length vectors with at least 2 points")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = y - y.mean()
    denom = float(total @ total)
    r2 = 1.0 if denom == 0.0 else 1.0 - float(resid @ resid) / denom
    return float(slope), float(intercept), r2


def bootstrap_quantile_ci(
    samples,
    q: float,
    stream: RngStream,
    n_boot: int = 2000,
    level: float = 0.95,
) -> tuple[float, float, float]:
    """Percentile bootstrap interval for a quantile of an i.i.d. sample.

    Returns (point_estimate, lo, hi).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError("need a flat sample of at least 2 values")
    if not (0.0 < q < 1.0):
        raise ValueError("quantile must lie strictly inside (0, 1)")
    point = float(np.quantile(samples, q))
    rng = stream.generator()
    idx = rng.integers(0, samples.size, size=(n_boot, samples.size))
    boot = np.quantile(samples[idx], q, axis=1)
    tail = 0.5 * (1.0 - level)
    lo, hi = np.quantile(boot, [tail, 1.0 - tail])
    return point, float(lo), float(hi)


def hill_tail_exponent(samples, top_fraction: float = 0.1) -> float:
    """Hill estimate of a power-law tail index from the largest order stats.

    Uses the top ``top_fraction`` of the sample (at least 5 points).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if np.any(x <= 0):
        raise ValueError("tail estimation needs positive samples")
    k = max(5, int(top_fraction * x.size))
    if k >= x.size:
        raise ValueError("sample too small for the requested tail fraction")
    tail = x[-k:]
    pivot = x[-k - 1]
    return float(1.0 / np.mean(np.log(tail / pivot)))
