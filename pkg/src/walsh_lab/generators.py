"""Random instances for the experiments and property tests.

Every generator takes a ``numpy.random.Generator`` so that a trial is fully
determined by its sub-seed.
"""
from __future__ import annotations

import numpy as np

from .dyadic import DyadicFunction
from .phase_plane import Bitile, Linearization, Tree, bitile_less
from .walsh import Tile, inverse_fwht
from .weights import Weight, power_weight, uniform_weight


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial 64-bit sub-seed, derived by counter from the run seed."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(seed, trial))


def parse_weight(spec: str):
    """'constant' -> 0.0, 'power:a' -> a.  Returns the exponent alpha."""
    if spec == "constant":
        return 0.0
    if spec.startswith("power:"):
        try:
            return float(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad power weight exponent in {spec!r}") from None
    raise ValueError(f"unknown weight spec {spec!r} (expected constant or power:a)")


def make_weight(alpha: float, res: int) -> Weight:
    return uniform_weight(res) if alpha == 0 else power_weight(alpha, res)


def random_function(rng, res: int) -> DyadicFunction:
    """Walsh coefficients i.i.d. uniform in [-1, 1], transformed back."""
    return inverse_fwht(rng.uniform(-1.0, 1.0, 1 << res))


def random_set(rng, res: int, pieces: int | None = None) -> np.ndarray:
    """Nonempty union of random dyadic intervals, as a cell mask."""
    n = 1 << res
    if pieces is None:
        pieces = int(rng.integers(1, 5))
    mask = np.zeros(n, dtype=bool)
    for _ in range(pieces):
        k = int(rng.integers(0, res + 1))
        m = int(rng.integers(0, 1 << k))
        mask[m << (res - k):(m + 1) << (res - k)] = True
    return mask


def signed_indicator(rng, mask: np.ndarray) -> DyadicFunction:
    """A function with |f| <= 1_E: random signs and magnitudes in [1/2, 1] on E."""
    vals = rng.choice([-1.0, 1.0], mask.size) * rng.uniform(0.5, 1.0, mask.size)
    return DyadicFunction(np.where(mask, vals, 0.0))


def all_bitiles(res: int) -> list[Bitile]:
    return [Bitile(k, m, n) for k in range(res) for m in range(1 << k) for n in range(1 << (res - k - 1))]


def random_bitiles(rng, res: int, keep: float | None = None) -> set:
    """Each resolvable bitile kept independently with probability ``keep``."""
    if keep is None:
        keep = float(rng.uniform(0.05, 0.5))
    return {P for P in all_bitiles(res) if rng.random() < keep}


def random_disjoint_tiles(rng, res: int, attempts: int | None = None) -> list[Tile]:
    """Greedy random set of pairwise disjoint tiles, using an occupancy grid
    of 2^res x 2^res unit phase-plane cells."""
    tiles = [Tile(k, m, n) for k in range(res + 1) for m in range(1 << k) for n in range(1 << (res - k))]
    order = rng.permutation(len(tiles))
    if attempts is None:
        attempts = int(rng.integers(1, len(tiles) + 1))
    grid = np.zeros((1 << res, 1 << res), dtype=bool)
    out = []
    for i in order[:attempts]:
        t = tiles[i]
        ts = slice(t.m << (res - t.k), (t.m + 1) << (res - t.k))
        fs = slice(t.n << t.k, (t.n + 1) << t.k)
        if not grid[ts, fs].any():
            grid[ts, fs] = True
            out.append(t)
    return out


def random_tree(rng, res: int, keep: float | None = None) -> Tree:
    """A random top and a random nonempty subset of the bitiles below it."""
    if keep is None:
        keep = float(rng.uniform(0.2, 1.0))
    bits = all_bitiles(res)
    top = bits[int(rng.integers(len(bits)))]
    below = [P for P in bits if bitile_less(P, top)]
    members = [P for P in below if rng.random() < keep] or [top]
    return Tree(top, frozenset(members))


def random_stopping_values(rng, res: int, start: np.ndarray | None = None, p_stop: float | None = None) -> np.ndarray:
    """Cell values of a stopping time tau >= start: a coin on every dyadic
    interval; tau(x) is the first scale j > start(x) whose coin says stop."""
    if p_stop is None:
        p_stop = float(rng.uniform(0.2, 0.8))
    n = 1 << res
    if start is None:
        start = np.full(n, -1)
    tau = np.full(n, res)
    done = np.zeros(n, dtype=bool)
    for j in range(res + 1):
        coins = np.repeat(rng.random(1 << j) < p_stop, n >> j)
        hit = ~done & (j > start) & coins
        tau[hit] = j
        done |= hit
    return np.maximum(tau, np.maximum(start, 0))


def random_stopping_sequence(rng, res: int, count: int) -> list[np.ndarray]:
    out = [np.zeros(1 << res, dtype=np.int64)]
    for _ in range(count - 1):
        out.append(random_stopping_values(rng, res, start=out[-1]))
    return out


def random_linearization(rng, res: int, r: float, max_len: int = 4) -> Linearization:
    """Random increasing frequency chains with dual coefficients normalized so
    that sum |a_j|^{r'} = 1."""
    rp = r / (r - 1)
    K = 1 << res
    freqs, coeffs = [], []
    for _ in range(K):
        L = int(rng.integers(0, max_len + 1))
        if L == 0:
            freqs.append(np.zeros(0, np.int64))
            coeffs.append(np.zeros(0))
            continue
        ch = np.sort(rng.choice(K + 1, size=min(L + 1, K + 1), replace=False)).astype(np.int64)
        a = rng.uniform(-1, 1, ch.size - 1)
        a /= np.sum(np.abs(a) ** rp) ** (1 / rp)
        freqs.append(ch)
        coeffs.append(a)
    return Linearization(res, r, freqs, coeffs)
