"""Tree selection by size and by density, and the level decompositions built
from them.

Size selection picks, among all tops whose maximal 2-overlapping tree still
carries energy >= (sigma/2)^2 w(I_Q), the one whose upper frequency tile
starts lowest (ties: longer I_Q, then leftmost I_Q), and removes the whole
tree {P : P < Q}.  With that order the lower tiles of the selected
2-overlapping parts are pairwise disjoint.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import sparse

from .dyadic import DyadicFunction
from .phase_plane import (Bitile, BitileArrays, Linearization, Tree, conjugate, density, density_tops, size,
                          size_tops, split_tree)
from .weights import Weight


TIE_SLACK = 1e-12


class SelectionError(RuntimeError):
    pass


@dataclass
class Forest:
    trees: list = field(default_factory=list)
    selection_order: list = field(default_factory=list)

    def members(self) -> set:
        out = set()
        for T in self.trees:
            out |= T.members
        return out

    def mass(self, w: Weight) -> float:
        return float(sum(w.measure(T.interval) for T in self.trees))

    def __len__(self):
        return len(self.trees)

    def two_overlapping_parts(self) -> list[Tree]:
        return [split_tree(T)[1] for T in self.trees]

    def lower_tiles(self) -> list:
        """D = {P_1 : P in the 2-overlapping part of some tree}."""
        return [P.lower for T2 in self.two_overlapping_parts() for P in T2]


def _below(arr: BitileArrays, Q: Bitile) -> np.ndarray:
    """Mask of bitiles P with P < Q."""
    shift = np.maximum(arr.k - Q.k, 0)
    time_ok = (arr.k >= Q.k) & ((arr.m >> shift) == Q.m)
    lo, hi = arr.n << (arr.k + 1), (arr.n + 1) << (arr.k + 1)
    qlo, qhi = Q.freq
    return time_ok & (lo < qhi) & (qlo < hi)


def _incidence(arr: BitileArrays, tops_of):
    """Sparse [top, bitile] incidence from explicit top enumeration."""
    index, rows, cols = {}, [], []
    for j, P in enumerate(arr.items):
        for Q in tops_of(P):
            i = index.setdefault(Q, len(index))
            rows.append(i)
            cols.append(j)
    tops = [None] * len(index)
    for Q, i in index.items():
        tops[i] = Q
    A = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(tops), len(arr)))
    return tops, A


def _size_key(Q: Bitile):
    # lowest upper tile first, then longer interval, then leftmost
    return ((2 * Q.n + 1) << Q.k, Q.k, Q.m)


def select_by_size(bitiles: Iterable[Bitile], f: DyadicFunction, w: Weight, sigma: float):
    """Split off trees until size(residual) < sigma / 2.

    Returns (residual, forest).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    arr = BitileArrays(bitiles)
    if len(arr) == 0:
        return set(), Forest()
    e = arr.energies(f, w)
    tops, A = _incidence(arr, size_tops)
    qk = np.array([Q.k for Q in tops])
    qm = np.array([Q.m for Q in tops])
    wq = w.prefix[(qm + 1) << (w.res - qk)] - w.prefix[qm << (w.res - qk)]
    keys = np.array([_size_key(Q) for Q in tops])
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    rank = np.empty(len(tops), dtype=np.int64)
    rank[order] = np.arange(len(tops))
    thresh = (sigma / 2.0) ** 2 * wq * (1 - TIE_SLACK)
    alive = np.ones(len(arr), dtype=bool)
    forest = Forest()
    for it in range(len(arr) + 1):
        num = A @ (e * alive)
        viol = np.nonzero(num >= thresh)[0]
        if viol.size == 0:
            break
        if it == len(arr):
            raise SelectionError("size selection exceeded its iteration cap")
        qi = int(viol[np.argmin(rank[viol])])
        Q = tops[qi]
        take = _below(arr, Q) & alive
        members = frozenset(arr.items[j] for j in np.nonzero(take)[0])
        forest.trees.append(Tree(Q, members))
        forest.selection_order.append(it)
        alive &= ~take
    residual = {arr.items[j] for j in np.nonzero(alive)[0]}
    return residual, forest


def _density_values(A: np.ndarray, w: Weight, tops: list) -> np.ndarray:
    """Averaged density mass for each top, from a 2-d summed-area table."""
    K = A.shape[0]
    S = np.zeros((K + 1, K + 1))
    S[1:, 1:] = A[:, :K].cumsum(axis=0).cumsum(axis=1)
    qk = np.array([Q.k for Q in tops])
    qm = np.array([Q.m for Q in tops])
    qn = np.array([Q.n for Q in tops])
    x0, x1 = qm << (w.res - qk), (qm + 1) << (w.res - qk)
    f0, f1 = qn << (qk + 1), (qn + 1) << (qk + 1)
    tot = S[x1, f1] - S[x0, f1] - S[x1, f0] + S[x0, f0]
    return tot / (w.prefix[x1] - w.prefix[x0])


def select_by_density(bitiles: Iterable[Bitile], lin: Linearization, g: DyadicFunction, w: Weight, r: float,
                      lam: float):
    """Split off trees {P : P < Q} for tops Q of density >= lam/2, longest
    I_Q first, until density(residual) < lam / 2."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    arr = BitileArrays(bitiles)
    if len(arr) == 0:
        return set(), Forest()
    rp = conjugate(r)
    tops, _ = _incidence(arr, density_tops)
    dens = _density_values(lin.mass_array(g, w), w, tops)
    # a small relative slack keeps borderline tops (equal up to rounding) in
    # the violator list, so the residual is strictly below lam/2 as rechecked
    viol = [i for i in range(len(tops)) if dens[i] >= (lam / 2.0) ** rp * (1 - TIE_SLACK)]
    viol.sort(key=lambda i: (tops[i].k, tops[i].freq[0], tops[i].m))
    alive = np.ones(len(arr), dtype=bool)
    forest = Forest()
    it = 0
    for i in viol:
        Q = tops[i]
        take = _below(arr, Q) & alive
        if not take.any():
            continue
        if it >= len(arr):
            raise SelectionError("density selection exceeded its iteration cap")
        forest.trees.append(Tree(Q, frozenset(arr.items[j] for j in np.nonzero(take)[0])))
        forest.selection_order.append(it)
        it += 1
        alive &= ~take
    residual = {arr.items[j] for j in np.nonzero(alive)[0]}
    return residual, forest


def pairwise_disjoint_tiles(tiles) -> bool:
    """Exhaustive pair check that tiles do not intersect in the plane."""
    tiles = list(tiles)
    if len(tiles) < 2:
        return True
    k = np.array([t.k for t in tiles])
    m = np.array([t.m for t in tiles])
    n = np.array([t.n for t in tiles])
    lo, hi = n << k, (n + 1) << k

    def inside(a, b):
        # I_a is contained in I_b
        return (k[a] >= k[b]) & ((m[a] >> np.maximum(k[a] - k[b], 0)) == m[b])

    i, j = np.triu_indices(len(tiles), 1)
    time = inside(i, j) | inside(j, i)
    freq = (lo[i] < hi[j]) & (lo[j] < hi[i])
    return not np.any(time & freq)


def compare_decompositions(selected: Forest, other: Forest, w: Weight) -> float:
    """sum_T w(I_T) over ``selected`` divided by the same sum over ``other``."""
    a, b = selected.members(), other.members()
    if a != b:
        raise ValueError("forests cover different bitile collections")
    if not a:
        return 1.0
    return selected.mass(w) / other.mass(w)


def singleton_cover(bitiles: Iterable[Bitile]) -> Forest:
    trees = [Tree(P, frozenset([P])) for P in sorted(set(bitiles))]
    return Forest(trees, list(range(len(trees))))


def coarsest_cover(bitiles: Iterable[Bitile]) -> Forest:
    """Tree cover that repeatedly takes the alive bitile with the longest
    interval as a top and removes everything below it."""
    arr = BitileArrays(bitiles)
    alive = np.ones(len(arr), dtype=bool)
    forest = Forest()
    for j in np.lexsort((arr.n, arr.m, arr.k)):
        if not alive[j]:
            continue
        Q = arr.items[j]
        take = _below(arr, Q) & alive
        forest.trees.append(Tree(Q, frozenset(arr.items[i] for i in np.nonzero(take)[0])))
        forest.selection_order.append(len(forest.selection_order))
        alive &= ~take
    return forest


# -- level decompositions ----------------------------------------------------

@dataclass
class LevelRecord:
    n: int
    k: int | None
    trees: list
    mass_w: float
    mass_target: float
    size_achieved: float
    size_target: float
    density_achieved: float
    density_target: float

    @property
    def members(self) -> set:
        out = set()
        for T in self.trees:
            out |= T.members
        return out


@dataclass
class DecompositionReport:
    mode: str
    levels: list = field(default_factory=list)
    sigma: float = 0.0
    tau: float = 0.0
    wF: float = 0.0
    wG: float = 0.0

    def members(self) -> list:
        out = []
        for L in self.levels:
            out.extend(L.members)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["level_n", "level_k", "tree_count", "mass_w", "size_achieved", "size_target",
                     "density_achieved", "density_target"])
        for L in self.levels:
            wr.writerow([L.n, "" if L.k is None else L.k, len(L.trees), repr(L.mass_w), repr(L.size_achieved),
                         repr(L.size_target), repr(L.density_achieved), repr(L.density_target)])
        return buf.getvalue()


def _start_level(bounds: list[float]) -> int:
    finite = [b for b in bounds if math.isfinite(b)]
    return int(math.floor(min(finite))) if finite else 0


def level_decomposition(bitiles: Iterable[Bitile], f: DyadicFunction, g: DyadicFunction, lin: Linearization,
                        w: Weight, q: float, r: float, mode: str = "case1", F=None, G=None,
                        max_levels: int = 200) -> DecompositionReport:
    """Alternate size and density selection at geometric thresholds.

    ``F`` and ``G`` default to the supports of f and g.  The weight is
    rescaled so that max(w(F), w(G)) = 1; size and density are unaffected by
    that rescaling.
    """
    if q <= 1 or r <= 2 * q:
        raise ValueError("need q > 1 and r > 2q")
    if mode not in ("case1", "case2"):
        raise ValueError(f"unknown mode {mode!r}")
    items = set(bitiles)
    Fm = np.asarray(F if F is not None else f.values != 0, dtype=bool)
    Gm = np.asarray(G if G is not None else g.values != 0, dtype=bool)
    report = DecompositionReport(mode)
    if not items:
        return report
    scale = max(w.mass(Fm), w.mass(Gm))
    if scale <= 0:
        raise ValueError("w(F) and w(G) cannot both vanish")
    wn = w.scaled(1.0 / scale)
    wF, wG = wn.mass(Fm), wn.mass(Gm)
    rp = conjugate(r)
    sigma = size(items, f, wn)
    delta = density(items, lin, g, wn, r)
    tau = wF ** (1.0 / (2 * q)) if wF > 0 else 0.0
    report.sigma, report.tau, report.wF, report.wG = sigma, tau, wF, wG

    if mode == "case1":
        def s_target(n):
            return min(sigma, 2.0 ** (-n / (2 * q)) * tau)

        def d_target(n):
            return min(1.0, 2.0 ** (-n / rp))
        bounds = []
        if sigma > 0 and tau > 0:
            bounds.append(2 * q * math.log2(tau / sigma))
        if 0 < delta <= 1:
            bounds.append(rp * math.log2(1.0 / delta))
    else:
        def s_target(n):
            return 2.0 ** (-n / (2 * q))

        def d_target(n):
            return 2.0 ** (-n / rp) * wG ** (1.0 / rp)
        bounds = []
        if sigma > 0:
            bounds.append(-2 * q * math.log2(sigma))
        if delta > 0 and wG > 0:
            bounds.append(rp * math.log2(wG ** (1.0 / rp) / delta))

    n = _start_level(bounds)
    current = set(items)
    for _ in range(max_levels):
        if not current:
            break
        cur_size = size(current, f, wn)
        cur_dens = density(current, lin, g, wn, r)
        trees: list = []
        if cur_size > 0 or cur_dens > 0:
            s_next, d_next = s_target(n + 1), d_target(n + 1)
            if s_next > 0:
                current, fs = select_by_size(current, f, wn, 2 * s_next)
                trees += fs.trees
            if d_next > 0:
                current, fd = select_by_density(current, lin, g, wn, r, 2 * d_next)
                trees += fd.trees
        else:
            trees = singleton_cover(current).trees
            current = set()
        if trees:
            members = set().union(*(T.members for T in trees))
            report.levels.append(LevelRecord(
                n, None, trees, sum(wn.measure(T.interval) for T in trees), 2.0 ** n,
                size(members, f, wn), s_target(n), density(members, lin, g, wn, r), d_target(n)))
        n += 1
    else:
        if current:
            raise SelectionError("level decomposition did not exhaust the collection")

    if mode == "case2":
        report.levels = [rec for L in report.levels for rec in _refine_level(L, f, g, lin, wn, q, r)]
    return report


def _refine_level(L: LevelRecord, f, g, lin, wn, q, r) -> list:
    """Split a case-2 level P_n into P_{n,k}, k >= 0, with size <= 2^-(n+k)/(2q)."""
    out = []
    current = set(L.members)
    k = 0
    while current:
        s_next = 2.0 ** (-(L.n + k + 1) / (2 * q))
        if size(current, f, wn) == 0:
            trees = singleton_cover(current).trees
            current = set()
        else:
            current, fs = select_by_size(current, f, wn, 2 * s_next)
            trees = fs.trees
        if trees:
            members = set().union(*(T.members for T in trees))
            out.append(LevelRecord(L.n, k, trees, sum(wn.measure(T.interval) for T in trees), 2.0 ** L.n,
                                   size(members, f, wn), 2.0 ** (-(L.n + k) / (2 * q)),
                                   density(members, lin, g, wn, r), L.density_target))
        k += 1
        if k > 400:
            raise SelectionError("level refinement did not terminate")
    return out
