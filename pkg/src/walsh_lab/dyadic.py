"""Dyadic intervals, step functions on [0, 1), the Haar system and
martingale projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_RES = 12


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """[m 2^-k, (m+1) 2^-k) inside [0, 1)."""

    k: int
    m: int

    def __post_init__(self):
        if self.k < 0 or not 0 <= self.m < (1 << self.k):
            raise ValueError(f"invalid dyadic interval k={self.k} m={self.m}")

    @property
    def length(self) -> float:
        return 2.0 ** -self.k

    @property
    def left(self) -> float:
        return self.m * 2.0 ** -self.k

    @property
    def right(self) -> float:
        return (self.m + 1) * 2.0 ** -self.k

    def contains(self, other: "DyadicInterval") -> bool:
        """True iff ``other`` is a subset of ``self``."""
        if other.k < self.k:
            return False
        return (other.m >> (other.k - self.k)) == self.m

    def intersects(self, other: "DyadicInterval") -> bool:
        return self.contains(other) or other.contains(self)

    def parent(self) -> "DyadicInterval":
        if self.k == 0:
            raise ValueError("[0,1) has no dyadic parent")
        return DyadicInterval(self.k - 1, self.m >> 1)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return DyadicInterval(self.k + 1, 2 * self.m), DyadicInterval(self.k + 1, 2 * self.m + 1)

    def cells(self, res: int) -> slice:
        """Slice of grid cells at resolution ``res`` covered by the interval."""
        if res < self.k:
            raise ValueError(f"resolution {res} cannot resolve scale {self.k}")
        width = 1 << (res - self.k)
        return slice(self.m * width, (self.m + 1) * width)


def all_intervals(max_scale: int):
    """Every dyadic interval with scale 0..max_scale, coarse to fine."""
    for k in range(max_scale + 1):
        for m in range(1 << k):
            yield DyadicInterval(k, m)


class DyadicFunction:
    """A step function on [0, 1) with 2**res equal cells.

    Values are stored in a read-only float64 array; arithmetic returns new
    instances.
    """

    def __init__(self, values, res: int | None = None):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        n = arr.size
        inferred = n.bit_length() - 1
        if (1 << inferred) != n:
            raise ValueError(f"length {n} is not a power of two")
        if res is not None and res != inferred:
            raise ValueError(f"length {n} does not match res={res}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        arr.setflags(write=False)
        self.res = inferred
        self.values = arr

    @classmethod
    def constant(cls, c: float, res: int) -> "DyadicFunction":
        return cls(np.full(1 << res, float(c)))

    @classmethod
    def indicator(cls, mask, res: int | None = None) -> "DyadicFunction":
        return cls(np.asarray(mask, dtype=np.float64), res)

    @classmethod
    def indicator_of(cls, interval: DyadicInterval, res: int) -> "DyadicFunction":
        v = np.zeros(1 << res)
        v[interval.cells(res)] = 1.0
        return cls(v)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"DyadicFunction(res={self.res}, values={self.values!r})"

    def _coerce(self, other):
        if isinstance(other, DyadicFunction):
            if other.res != self.res:
                raise ValueError(f"resolution mismatch: {self.res} vs {other.res}")
            return other.values
        return other

    def __add__(self, other):
        return DyadicFunction(self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return DyadicFunction(self.values - self._coerce(other))

    def __rsub__(self, other):
        return DyadicFunction(self._coerce(other) - self.values)

    def __mul__(self, other):
        return DyadicFunction(self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return DyadicFunction(self.values / self._coerce(other))

    def __neg__(self):
        return DyadicFunction(-self.values)

    def __abs__(self):
        return DyadicFunction(np.abs(self.values))

    def mean(self) -> float:
        return float(self.values.mean())

    def integral(self) -> float:
        return self.mean()

    def refine(self, res: int) -> "DyadicFunction":
        """Same step function sampled on a finer grid (values duplicated)."""
        if res < self.res:
            raise ValueError("refine() cannot coarsen; use conditional_expectation")
        return DyadicFunction(np.repeat(self.values, 1 << (res - self.res)))

    def allclose(self, other, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.values, self._coerce(other), rtol=0.0, atol=atol))


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, DyadicFunction) else np.asarray(f, dtype=np.float64)


def haar(interval: DyadicInterval, res: int) -> DyadicFunction:
    """L^2-normalised Haar function: +|I|^-1/2 on the left half, - on the right."""
    if res < interval.k + 1:
        raise ValueError(f"unresolvable: Haar function of scale {interval.k} needs res >= {interval.k + 1}")
    v = np.zeros(1 << res)
    sl = interval.cells(res)
    half = (sl.stop - sl.start) // 2
    amp = 2.0 ** (interval.k / 2)
    v[sl.start:sl.start + half] = amp
    v[sl.start + half:sl.stop] = -amp
    return DyadicFunction(v)


def inner(f: DyadicFunction, g: DyadicFunction) -> float:
    """Unweighted L^2 pairing; both functions must share a resolution."""
    if f.res != g.res:
        raise ValueError(f"resolution mismatch ({f.res} vs {g.res}); refine() first")
    return float(np.dot(f.values, g.values)) * 2.0 ** -f.res


def block_means(values: np.ndarray, k: int) -> np.ndarray:
    """Averages over the 2**k dyadic intervals of scale k (last axis)."""
    n = values.shape[-1]
    return values.reshape(values.shape[:-1] + (1 << k, n >> k)).mean(axis=-1)


def expectation_ladder(values: np.ndarray) -> np.ndarray:
    """Array of shape (res+1, 2**res) whose row k is E_k f, cell-wise."""
    n = values.size
    res = n.bit_length() - 1
    out = np.empty((res + 1, n))
    for k in range(res + 1):
        out[k] = np.repeat(block_means(values, k), n >> k)
    return out


def conditional_expectation(f: DyadicFunction, k: int) -> DyadicFunction:
    """E_k f: average of f over each dyadic interval of length 2^-k."""
    if not 0 <= k <= f.res:
        raise ValueError(f"scale k={k} outside [0, {f.res}]")
    return DyadicFunction(np.repeat(block_means(f.values, k), 1 << (f.res - k)))


def delta_project(f: DyadicFunction, j: int) -> DyadicFunction:
    """Projection onto Haar functions of intervals of length 2^(1-j).

    On a dyadic grid this is the martingale difference E_j f - E_{j-1} f.
    """
    if not 1 <= j <= f.res:
        raise ValueError(f"projection index j={j} outside [1, {f.res}]")
    return DyadicFunction(conditional_expectation(f, j).values - conditional_expectation(f, j - 1).values)


def lp_norm_weighted(f, w, p: float) -> float:
    """(sum |f_i|^p w_i 2^-res)^(1/p); p = inf gives the max over cells with w > 0."""
    if p < 1:
        raise ValueError(f"p={p} < 1 is not a norm exponent")
    fv, wv = _values(f), _values(w)
    if fv.shape != wv.shape:
        raise ValueError("f and w must share a resolution")
    if np.isinf(p):
        mask = wv > 0
        return float(np.abs(fv[mask]).max()) if mask.any() else 0.0
    return float((np.sum(np.abs(fv) ** p * wv) / fv.size) ** (1.0 / p))
