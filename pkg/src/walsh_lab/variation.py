"""r-variation, jump counts and stopped martingale transforms on the dyadic
filtration."""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .dyadic import DyadicFunction, expectation_ladder, lp_norm_weighted


def _check_r(r: float):
    if r < 1:
        raise ValueError(f"r={r} < 1")


def r_variation_rows(values: np.ndarray, r: float) -> np.ndarray:
    """r-variation of every row of a 2-d array, by O(K^2) dynamic programming.

    best[:, j] is the largest sum of |increment|^r over chains ending at j.
    """
    _check_r(r)
    v = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if v.shape[1] == 0:
        return np.zeros(v.shape[0])
    if np.isinf(r):
        return v.max(axis=1) - v.min(axis=1)
    rows, K = v.shape
    best = np.zeros((rows, K))
    for j in range(1, K):
        gains = best[:, :j] + np.abs(v[:, j:j + 1] - v[:, :j]) ** r
        best[:, j] = gains.max(axis=1)
    return best.max(axis=1) ** (1.0 / r)


def r_variation(seq: Sequence[float], r: float) -> float:
    """sup over increasing index chains of (sum |a_{i_k} - a_{i_(k-1)}|^r)^(1/r)."""
    return float(r_variation_rows(np.asarray(seq, dtype=np.float64)[None, :], r)[0])


@lru_cache(maxsize=None)
def chain_incidence(K: int) -> np.ndarray:
    """0/1 matrix [chain, i*K + j] marking consecutive pairs (i, j) of every
    index subset of size >= 2."""
    rows = []
    for mask in range(1 << K):
        idx = [i for i in range(K) if mask >> i & 1]
        if len(idx) < 2:
            continue
        row = np.zeros(K * K, dtype=np.int8)
        for a, b in zip(idx, idx[1:]):
            row[a * K + b] = 1
        rows.append(row)
    if not rows:
        return np.zeros((0, K * K), dtype=np.int8)
    out = np.array(rows)
    out.setflags(write=False)
    return out


def r_variation_exhaustive(seq: Sequence[float], r: float) -> float:
    """Brute force over every index subset; intended for K <= 12."""
    _check_r(r)
    a = np.asarray(seq, dtype=np.float64)
    K = a.size
    B = chain_incidence(K)
    if B.shape[0] == 0:
        return 0.0
    gaps = np.abs(a[None, :] - a[:, None]).ravel()
    if np.isinf(r):
        return float((B * gaps).max())
    return float((B @ gaps ** r).max() ** (1.0 / r))


def jump_count(seq: Sequence[float], lam: float) -> int:
    """Largest number of increments exceeding lam along an increasing chain.

    Counted increments occupy index segments that may touch but not overlap,
    so greedily closing each segment at the earliest possible index is
    optimal (interval scheduling by earliest end).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    a = np.asarray(seq, dtype=np.float64)
    count = 0
    if a.size == 0:
        return 0
    lo = hi = a[0]
    for x in a[1:]:
        if x - lo > lam or hi - x > lam:
            count += 1
            lo = hi = x
        else:
            lo, hi = min(lo, x), max(hi, x)
    return count


def jump_count_rows(values: np.ndarray, lam: float) -> np.ndarray:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    v = np.atleast_2d(np.asarray(values, dtype=np.float64))
    count = np.zeros(v.shape[0], dtype=np.int64)
    lo = v[:, 0].copy()
    hi = v[:, 0].copy()
    for j in range(1, v.shape[1]):
        x = v[:, j]
        jump = (x - lo > lam) | (hi - x > lam)
        count += jump
        lo = np.where(jump, x, np.minimum(lo, x))
        hi = np.where(jump, x, np.maximum(hi, x))
    return count


def jump_count_exhaustive(seq: Sequence[float], lam: float) -> int:
    a = np.asarray(seq, dtype=np.float64)
    B = chain_incidence(a.size)
    if B.shape[0] == 0:
        return 0
    big = (np.abs(a[None, :] - a[:, None]) > lam).ravel().astype(np.int64)
    return int((B @ big).max())


# -- fields over the dyadic martingale ------------------------------------

def martingale_variation_field(f: DyadicFunction, r: float) -> DyadicFunction:
    """Cell-wise r-variation of E_0 f(x), E_1 f(x), ..., E_res f(x)."""
    ladder = expectation_ladder(f.values)
    return DyadicFunction(r_variation_rows(ladder.T, r))


def jump_count_field(f: DyadicFunction, lam: float) -> DyadicFunction:
    ladder = expectation_ladder(f.values)
    return DyadicFunction(jump_count_rows(ladder.T, lam).astype(np.float64))


def _nonzero_norm(f, w, p) -> float:
    nf = lp_norm_weighted(f, w, p)
    if nf == 0:
        raise ValueError("f must be nonzero")
    return nf


def lepingle_ratio(f: DyadicFunction, w, p: float, r: float) -> float:
    """||V^r(E_k f)||_{L^p(w)} / ||f||_{L^p(w)}."""
    if p <= 1 or r <= 2:
        raise ValueError("need p > 1 and r > 2")
    nf = _nonzero_norm(f, w, p)
    return lp_norm_weighted(martingale_variation_field(f, r), w, p) / nf


def jump_ratio(f: DyadicFunction, w, p: float, lam: float) -> float:
    """||lam N_lam^(1/2)||_{L^p(w)} / ||f||_{L^p(w)} with N_lam the jump-count field."""
    if p <= 1 or lam <= 0:
        raise ValueError("need p > 1 and lambda > 0")
    nf = _nonzero_norm(f, w, p)
    field = jump_count_field(f, lam)
    return lp_norm_weighted(lam * np.sqrt(field.values), w, p) / nf


# -- stopping times ----------------------------------------------------------

class NotAStoppingTime(ValueError):
    pass


class StoppingTime:
    """Scale-valued map on cells whose level set {N = k} is a union of
    dyadic intervals of length 2^-k."""

    def __init__(self, values, res: int):
        v = np.asarray(values, dtype=np.int64)
        if v.shape != (1 << res,):
            raise ValueError(f"need {1 << res} cell values")
        if v.min() < 0 or v.max() > res:
            raise NotAStoppingTime(f"not a stopping time: values must lie in [0, {res}]")
        for k in range(res + 1):
            lvl = (v == k).reshape(1 << k, -1)
            if np.any(lvl.any(axis=1) & ~lvl.all(axis=1)):
                raise NotAStoppingTime(f"not a stopping time: level set {{N = {k}}} splits a dyadic interval of length 2^-{k}")
        v.setflags(write=False)
        self.res = res
        self.values = v

    @classmethod
    def constant(cls, k: int, res: int) -> "StoppingTime":
        return cls(np.full(1 << res, k), res)


def stopping_transform(f: DyadicFunction, stops: Sequence[StoppingTime], signs) -> DyadicFunction:
    """sum_k eps_k (E_{N_k} f - E_{N_(k-1)} f), blocks between consecutive stops.

    ``stops`` must be pointwise non-decreasing; a repeated value gives an
    empty block.
    """
    stops = [s if isinstance(s, StoppingTime) else StoppingTime(s, f.res) for s in stops]
    signs = np.asarray(signs, dtype=np.float64)
    if len(stops) < 2:
        raise ValueError("need at least two stopping times")
    if signs.shape != (len(stops) - 1,):
        raise ValueError("one sign per block is required")
    if any(s.res != f.res for s in stops):
        raise ValueError("stopping time resolution mismatch")
    for a, b in zip(stops, stops[1:]):
        if np.any(b.values < a.values):
            raise ValueError("stopping times must be non-decreasing")
    ladder = expectation_ladder(f.values)
    cells = np.arange(1 << f.res)
    at = [ladder[s.values, cells] for s in stops]
    out = np.zeros(1 << f.res)
    for eps, lo, hi in zip(signs, at, at[1:]):
        out += eps * (hi - lo)
    return DyadicFunction(out)
