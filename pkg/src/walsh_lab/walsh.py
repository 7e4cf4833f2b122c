"""Walsh functions, tiles, Walsh packets and the fast Walsh-Hadamard transform.

Frequencies follow the doubling recursion

    W_0 = 1,  W_2n = W_n(2x) | W_n(2x-1),  W_2n+1 = W_n(2x) | -W_n(2x-1)

which is the Paley ordering: bit i of n (least significant first) pairs with
binary digit i+1 of x.  The butterfly below computes Hadamard-ordered sums and
then permutes by bit reversal to land in that ordering.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dyadic import DyadicFunction, DyadicInterval, haar


@dataclass(frozen=True, order=True)
class Tile:
    """Area-one dyadic rectangle I x omega with |I| = 2^-k,
    omega = [2^k n, 2^k (n+1))."""

    k: int
    m: int
    n: int

    def __post_init__(self):
        if self.k < 0 or not 0 <= self.m < (1 << self.k) or self.n < 0:
            raise ValueError(f"invalid tile {self.k, self.m, self.n}")

    @property
    def interval(self) -> DyadicInterval:
        return DyadicInterval(self.k, self.m)

    @property
    def freq(self) -> tuple[int, int]:
        """Integer endpoints [lo, hi) of the frequency interval."""
        return self.n << self.k, (self.n + 1) << self.k

    def resolvable(self, res: int) -> bool:
        return self.k <= res and ((self.n + 1) << self.k) <= (1 << res)


@dataclass
class WalshCoefficients:
    """Coefficients <f, W_k> for k < 2**res.

    ``numerators``/``denominator`` are populated in exact integer mode and
    satisfy coeffs == numerators / denominator exactly.
    """

    res: int
    coeffs: np.ndarray
    numerators: np.ndarray | None = None
    denominator: int | None = None


def _freq_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def tile_less(p1: Tile, p2: Tile) -> bool:
    """p1 < p2: the rectangles meet and I_p1 is inside I_p2."""
    return p2.interval.contains(p1.interval) and _freq_overlap(p1.freq, p2.freq)


def tiles_intersect(p1: Tile, p2: Tile) -> bool:
    return p1.interval.intersects(p2.interval) and _freq_overlap(p1.freq, p2.freq)


def _walsh_values(n: int, res: int) -> np.ndarray:
    if res == 0:
        return np.ones(1)
    half = _walsh_values(n >> 1, res - 1)
    return np.concatenate([half, -half if n & 1 else half])


def walsh(n: int, res: int) -> DyadicFunction:
    """W_n sampled at resolution res via the doubling recursion."""
    if n < 0 or n >= (1 << res):
        raise ValueError(f"unresolvable frequency: W_{n} needs n < 2**res = {1 << res}")
    return DyadicFunction(_walsh_values(n, res))


@lru_cache(maxsize=None)
def _bit_reversal(res: int) -> np.ndarray:
    idx = np.arange(1 << res)
    rev = np.zeros_like(idx)
    for b in range(res):
        rev |= ((idx >> b) & 1) << (res - 1 - b)
    return rev


def hadamard_sums(values: np.ndarray) -> np.ndarray:
    """Unnormalised sums sum_i v_i W_n(i) along the last axis, Paley order.

    Works for float or integer arrays (integers stay exact).
    """
    a = np.array(values, copy=True)
    n = a.shape[-1]
    res = n.bit_length() - 1
    lead = a.shape[:-1]
    h = 1
    while h < n:
        a = a.reshape(lead + (n // (2 * h), 2, h))
        x = a[..., 0, :].copy()
        y = a[..., 1, :]
        a[..., 0, :] = x + y
        a[..., 1, :] = x - y
        h *= 2
    a = a.reshape(lead + (n,))
    return a[..., _bit_reversal(res)]


def fwht(f: DyadicFunction, exact: bool = False) -> WalshCoefficients:
    """<f, W_k> for every k in O(res 2^res).

    With ``exact=True`` the values of 2^res f must be integers; sums are then
    carried out in int64 and returned as numerators over 4^res.
    """
    res = f.res
    if exact:
        scaled = f.values * (1 << res)
        ints = np.rint(scaled)
        if not np.array_equal(ints, scaled):
            raise ValueError("exact mode needs 2**res * f to be integer valued")
        num = hadamard_sums(ints.astype(np.int64))
        den = 1 << (2 * res)
        return WalshCoefficients(res, num / den, num, den)
    return WalshCoefficients(res, hadamard_sums(f.values) / (1 << res))


def inverse_fwht(c) -> DyadicFunction:
    """sum_k c_k W_k, from WalshCoefficients or a plain coefficient array."""
    coeffs = c.coeffs if isinstance(c, WalshCoefficients) else c
    return DyadicFunction(hadamard_sums(np.asarray(coeffs, dtype=np.float64)))


def fwht_direct(f: DyadicFunction) -> np.ndarray:
    """O(4^res) reference transform from explicit inner products."""
    n = 1 << f.res
    W = np.array([_walsh_values(k, f.res) for k in range(n)])
    return W @ f.values / n


def walsh_matrix(res: int) -> np.ndarray:
    """Row k holds W_k on the grid (integer valued)."""
    return hadamard_sums(np.eye(1 << res, dtype=np.int64)).T


def packet(p: Tile, res: int) -> DyadicFunction:
    """phi_p = 2^(k/2) W_n(2^k x - m) on I_p."""
    if not p.resolvable(res):
        raise ValueError(f"unresolvable tile {p} at res {res}")
    v = np.zeros(1 << res)
    v[p.interval.cells(res)] = 2.0 ** (p.k / 2) * _walsh_values(p.n, res - p.k)
    return DyadicFunction(v)


def packet_coefficients(f: DyadicFunction) -> list[np.ndarray]:
    """Entry [k][m, n] is <f, phi_(k,m,n)> for every resolvable tile.

    All tiles of a fixed scale come from one batched transform of the
    length-2^(res-k) blocks of f.
    """
    res = f.res
    out = []
    for k in range(res + 1):
        blocks = f.values.reshape(1 << k, 1 << (res - k))
        # <f, phi> = 2^(k/2) 2^-res sum_block f W_n
        out.append(hadamard_sums(blocks) * (2.0 ** (k / 2) / (1 << res)))
    return out


def partial_sum(f: DyadicFunction, N: int) -> DyadicFunction:
    """S_N f = sum_{k <= N} <f, W_k> W_k; S_{-1} f = 0."""
    n = 1 << f.res
    if N < -1 or N >= n:
        raise ValueError(f"partial sum index N={N} outside [-1, {n - 1}]")
    c = fwht(f).coeffs.copy()
    c[N + 1:] = 0.0
    return inverse_fwht(WalshCoefficients(f.res, c))


def partial_sum_ladder(f: DyadicFunction) -> np.ndarray:
    """Array (2**res, 2**res) whose row N is S_N f."""
    c = fwht(f).coeffs
    W = walsh_matrix(f.res).astype(np.float64)
    return np.cumsum(c[:, None] * W, axis=0)


def are_siblings(p: Tile, q: Tile) -> bool:
    return p.k == q.k and p.m == q.m and (p.n >> 1) == (q.n >> 1) and p.n != q.n


def haar_factorization(p: Tile, p_sib: Tile, q: Tile, res: int) -> tuple[float, float]:
    """Constants with phi_p = c_pq 1_I phi_q and phi_psib = c_p'q |I|^1/2 h_I phi_q.

    Signs are read off the functions themselves; the identities are checked
    cell-wise before returning.
    """
    if not (are_siblings(p, p_sib) and tile_less(p, q)):
        raise ValueError("not a sibling/dominating configuration")
    if not (p.resolvable(res) and p_sib.resolvable(res) and q.resolvable(res)) or res < p.k + 1:
        raise ValueError(f"tiles not resolvable at res {res}")
    I = p.interval
    sl = I.cells(res)
    phi_q = packet(q, res).values
    phi_p = packet(p, res).values
    phi_s = packet(p_sib, res).values
    h = haar(I, res).values * 2.0 ** (-I.k / 2)
    c1 = phi_p[sl.start] / phi_q[sl.start]
    c2 = phi_s[sl.start] / (h[sl.start] * phi_q[sl.start])
    ind = np.zeros(1 << res)
    ind[sl] = 1.0
    if not (np.allclose(phi_p, c1 * ind * phi_q, atol=1e-10) and np.allclose(phi_s, c2 * h * phi_q, atol=1e-10)):
        raise ArithmeticError(f"Walsh-Haar factorisation failed for {p}, {p_sib}, {q}")
    return float(c1), float(c2)


def tile_square_function(tiles, f: DyadicFunction) -> DyadicFunction:
    """S_D f = (sum_{p in D} |<f, phi_p>|^2 1_{I_p} / |I_p|)^(1/2)."""
    pc = packet_coefficients(f)
    out = np.zeros(1 << f.res)
    for p in tiles:
        if not p.resolvable(f.res):
            raise ValueError(f"unresolvable tile {p} at res {f.res}")
        out[p.interval.cells(f.res)] += pc[p.k][p.m, p.n] ** 2 * 2.0 ** p.k
    return DyadicFunction(np.sqrt(out))
