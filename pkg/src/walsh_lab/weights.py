"""Dyadic Muckenhoupt weights and the maximal / sharp functions."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .dyadic import DyadicFunction, DyadicInterval, _values, block_means


class Weight(DyadicFunction):
    """Strictly positive step function used as a measure w(E) = int_E w."""

    def __init__(self, values, res: int | None = None):
        super().__init__(values, res)
        if not np.all(self.values > 0):
            raise ValueError("weights must be strictly positive")

    @cached_property
    def prefix(self) -> np.ndarray:
        """Cumulative cell masses, prefix[i] = w([0, i 2^-res))."""
        out = np.concatenate([[0.0], np.cumsum(self.values)]) / self.values.size
        out.setflags(write=False)
        return out

    def measure(self, interval: DyadicInterval) -> float:
        sl = interval.cells(self.res)
        return float(self.prefix[sl.stop] - self.prefix[sl.start])

    def mass(self, mask) -> float:
        """w(E) for a cell mask (boolean array or 0/1 DyadicFunction)."""
        m = np.asarray(_values(mask), dtype=bool)
        return float(self.values[m].sum()) / self.values.size

    def total(self) -> float:
        return float(self.prefix[-1])

    def interval_masses(self, k: int) -> np.ndarray:
        """w(I) for the 2**k intervals of scale k."""
        edges = self.prefix[:: 1 << (self.res - k)]
        return np.diff(edges)

    def scaled(self, c: float) -> "Weight":
        return Weight(self.values * c)


def uniform_weight(res: int) -> Weight:
    return Weight(np.ones(1 << res))


def power_weight(alpha: float, res: int) -> Weight:
    """Exact cell averages of x^alpha."""
    if alpha <= -1:
        raise ValueError(f"x^{alpha} is not integrable near 0 (need alpha > -1)")
    i = np.arange(1 << res, dtype=np.float64)
    a1 = alpha + 1.0
    vals = ((i + 1) ** a1 - i ** a1) * 2.0 ** (-res * alpha) / a1
    return Weight(vals)


def ap_characteristic(w: Weight, p: float) -> float:
    """max over dyadic I of avg_I(w) * avg_I(w^(-1/(p-1)))^(p-1)."""
    if p <= 1:
        raise ValueError("only 1 < p < inf is supported (A_1 is out of scope)")
    v = w.values
    dual = v ** (-1.0 / (p - 1))
    best = 1.0
    for k in range(w.res + 1):
        prod = block_means(v, k) * block_means(dual, k) ** (p - 1)
        best = max(best, float(prod.max()))
    return best


def _max_over_scales(res: int, per_scale) -> np.ndarray:
    n = 1 << res
    out = np.full(n, -np.inf)
    for k in range(res + 1):
        out = np.maximum(out, np.repeat(per_scale(k), n >> k))
    return out


def maximal_dyadic(f: DyadicFunction) -> DyadicFunction:
    """Mf(x) = max over dyadic I containing x of avg_I |f|."""
    a = np.abs(f.values)
    return DyadicFunction(_max_over_scales(f.res, lambda k: block_means(a, k)))


def maximal_l2(f: DyadicFunction) -> DyadicFunction:
    """M_2 f(x) = max over dyadic I containing x of (avg_I |f|^2)^(1/2)."""
    a2 = f.values ** 2
    return DyadicFunction(np.sqrt(_max_over_scales(f.res, lambda k: block_means(a2, k))))


def maximal_weighted(f: DyadicFunction, w: Weight) -> DyadicFunction:
    """M_w f(x) = max over dyadic I containing x of w(I)^-1 int_I |f| w."""
    if f.res != w.res:
        raise ValueError("f and w must share a resolution")
    fw = np.abs(f.values) * w.values
    return DyadicFunction(_max_over_scales(f.res, lambda k: block_means(fw, k) / block_means(w.values, k)))


def sharp_dyadic(f: DyadicFunction) -> DyadicFunction:
    """Mean-oscillation sharp function: max over I of avg_I |f - avg_I f|."""
    v = f.values
    n = v.size

    def osc(k):
        blocks = v.reshape(1 << k, n >> k)
        return np.abs(blocks - blocks.mean(axis=1, keepdims=True)).mean(axis=1)

    return DyadicFunction(_max_over_scales(f.res, osc))
