"""Discretised variational Carleson operator over a bitile collection.

For a cell x, the block value attached to a frequency pair N' < N is

    B_x(N', N) = sum over P with x in I_P, N' not in omega_P, N in omega_{P_2}
                 of <f, phi_{P_1}> phi_{P_1}(x)

(the symmetric variant uses N' in omega_{P_1}, N not in omega_P).  Only the
dyadic cell containing a frequency matters, so integer frequencies
0..2^res suffice and the supremum over chains is an exact DP.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dyadic import DyadicFunction, lp_norm_weighted
from .phase_plane import (Bitile, BitileArrays, Linearization, Tree, conjugate, density, size)
from .variation import r_variation_rows
from .walsh import packet, partial_sum_ladder
from .weights import Weight, maximal_weighted

STANDARD = "standard"
SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class OperatorInstance:
    bitiles: tuple
    r: float
    variant: str = STANDARD

    def __init__(self, bitiles: Iterable[Bitile], r: float, variant: str = STANDARD):
        if variant not in (STANDARD, SYMMETRIC):
            raise ValueError(f"unknown variant {variant!r}")
        object.__setattr__(self, "bitiles", tuple(sorted(set(bitiles))))
        object.__setattr__(self, "r", float(r))
        object.__setattr__(self, "variant", variant)

    def check(self, res: int):
        for P in self.bitiles:
            if not P.resolvable(res):
                raise ValueError(f"bitile {P} is not resolvable at res {res}")


class _Geometry:
    """Per-bitile frequency endpoints and the cell-wise values of
    <f, phi_{P_1}> phi_{P_1}."""

    def __init__(self, inst: OperatorInstance, f: DyadicFunction):
        inst.check(f.res)
        self.res = f.res
        self.K = 1 << f.res
        arr = BitileArrays(inst.bitiles)
        self.items = arr.items
        self.lo = arr.n << (arr.k + 1)
        self.hi = (arr.n + 1) << (arr.k + 1)
        self.mid = self.lo + (1 << arr.k)
        coef = arr.coefficients(f) if len(arr) else np.zeros(0)
        V = np.zeros((len(arr), self.K))
        for i, P in enumerate(self.items):
            if coef[i] != 0.0:
                V[i] = coef[i] * packet(P.lower, f.res).values
        self.coef = coef
        self.V = V
        self.variant = inst.variant

    def block_column(self, N: int, cells: np.ndarray) -> np.ndarray:
        """B_x(N', N) for N' < N, rows indexed by ``cells``."""
        Np = np.arange(N)
        if self.variant == STANDARD:
            act = np.nonzero((self.mid <= N) & (N < self.hi))[0]
            if act.size == 0:
                return np.zeros((cells.size, N))
            mask = Np[None, :] < self.lo[act, None]
        else:
            act = np.nonzero(self.hi <= N)[0]
            if act.size == 0:
                return np.zeros((cells.size, N))
            mask = (self.lo[act, None] <= Np[None, :]) & (Np[None, :] < self.mid[act, None])
        return self.V[act][:, cells].T @ mask.astype(np.float64)

    def block_values(self, x: int, Nprev: np.ndarray, Ncur: np.ndarray) -> np.ndarray:
        """B_x(N_(j-1), N_j) for each consecutive pair of a chain."""
        if self.variant == STANDARD:
            act = (Nprev[None, :] < self.lo[:, None]) & (self.mid[:, None] <= Ncur[None, :]) & (Ncur[None, :] < self.hi[:, None])
        else:
            act = (self.lo[:, None] <= Nprev[None, :]) & (Nprev[None, :] < self.mid[:, None]) & (self.hi[:, None] <= Ncur[None, :])
        return self.V[:, x] @ act.astype(np.float64)


def _chain_dp(geo: _Geometry, r: float, chunk: int = 64):
    """best and predecessor tables, shape (cells, K+1)."""
    K = geo.K
    n_cells = K
    best = np.zeros((n_cells, K + 1))
    pred = np.full((n_cells, K + 1), -1, dtype=np.int64)
    for s in range(0, n_cells, chunk):
        cells = np.arange(s, min(s + chunk, n_cells))
        b = best[cells]
        pr = pred[cells]
        for N in range(1, K + 1):
            col = geo.block_column(N, cells)
            gains = b[:, :N] + np.abs(col) ** r
            j = gains.argmax(axis=1)
            g = gains[np.arange(cells.size), j]
            take = g > 0
            b[:, N] = np.where(take, g, 0.0)
            pr[:, N] = np.where(take, j, -1)
        best[cells] = b
        pred[cells] = pr
    return best, pred


def carleson_variation(inst: OperatorInstance, f: DyadicFunction) -> DyadicFunction:
    """C_{r,P} f cell by cell."""
    if not 1 < inst.r < np.inf:
        raise ValueError("need 1 < r < inf")
    if not inst.bitiles:
        return DyadicFunction(np.zeros(1 << f.res))
    geo = _Geometry(inst, f)
    best, _ = _chain_dp(geo, inst.r)
    return DyadicFunction(best.max(axis=1) ** (1.0 / inst.r))


def linearize(inst: OperatorInstance, f: DyadicFunction) -> Linearization:
    """Maximising chain per cell and the dual weights a_j = sgn(v_j)|v_j|^(r-1)/||v||_r^(r-1)."""
    r = inst.r
    if not 1 < r < np.inf:
        raise ValueError("need 1 < r < inf")
    res = f.res
    if not inst.bitiles:
        return Linearization.empty(res, r)
    geo = _Geometry(inst, f)
    best, pred = _chain_dp(geo, r)
    freqs, coeffs = [], []
    for x in range(geo.K):
        end = int(best[x].argmax())
        if best[x, end] <= 0:
            freqs.append(np.zeros(0, np.int64))
            coeffs.append(np.zeros(0))
            continue
        chain = [end]
        while pred[x, chain[-1]] >= 0:
            chain.append(int(pred[x, chain[-1]]))
        chain = np.array(chain[::-1], dtype=np.int64)
        v = geo.block_values(x, chain[:-1], chain[1:])
        norm = np.sum(np.abs(v) ** r) ** (1.0 / r)
        a = np.sign(v) * (np.abs(v) / norm) ** (r - 1)
        freqs.append(chain)
        coeffs.append(a)
    return Linearization(res, r, freqs, coeffs)


def coefficient_field(inst: OperatorInstance, lin: Linearization, res: int) -> np.ndarray:
    """a_P(x) as an array [bitile, cell] (bitiles in sorted order)."""
    arr = BitileArrays(inst.bitiles)
    lo = arr.n << (arr.k + 1)
    hi = (arr.n + 1) << (arr.k + 1)
    mid = lo + (1 << arr.k)
    out = np.zeros((len(arr), 1 << res))
    for x in range(1 << res):
        a = lin.coeffs[x]
        if a.size == 0:
            continue
        Np, Nc = lin.freqs[x][:-1], lin.freqs[x][1:]
        if inst.variant == STANDARD:
            act = ((Np[None, :] < lo[:, None]) | (Np[None, :] >= hi[:, None])) & (mid[:, None] <= Nc[None, :]) & (Nc[None, :] < hi[:, None])
        else:
            act = (lo[:, None] <= Np[None, :]) & (Np[None, :] < mid[:, None]) & ((Nc[None, :] < lo[:, None]) | (Nc[None, :] >= hi[:, None]))
        out[:, x] = act.astype(np.float64) @ a
    return out


def linearized_operator(inst: OperatorInstance, f: DyadicFunction, lin: Linearization) -> DyadicFunction:
    """C_P f(x) = sum_P <f, phi_{P_1}> phi_{P_1}(x) a_P(x)."""
    if not inst.bitiles:
        return DyadicFunction(np.zeros(1 << f.res))
    inst.check(f.res)
    arr = BitileArrays(inst.bitiles)
    coef = arr.coefficients(f)
    aP = coefficient_field(inst, lin, f.res)
    out = np.zeros(1 << f.res)
    for i, P in enumerate(arr.items):
        if coef[i] != 0.0:
            out += coef[i] * packet(P.lower, f.res).values * aP[i]
    return DyadicFunction(out)


def bilinear_form(inst: OperatorInstance, f: DyadicFunction, g: DyadicFunction, lin: Linearization, w: Weight) -> float:
    """B_P(f, g) = sum_P <f, phi_{P_1}> <phi_{P_1} a_P, g w>."""
    if not inst.bitiles:
        return 0.0
    inst.check(f.res)
    arr = BitileArrays(inst.bitiles)
    coef = arr.coefficients(f)
    aP = coefficient_field(inst, lin, f.res)
    gw = g.values * w.values
    total = 0.0
    for i, P in enumerate(arr.items):
        total += coef[i] * float(np.dot(packet(P.lower, f.res).values * aP[i], gw)) / (1 << f.res)
    return total


class DegenerateTree(ValueError):
    pass


def tree_ratio(T: Tree, f: DyadicFunction, g: DyadicFunction, lin: Linearization, w: Weight, s: float,
               variant: str = STANDARD) -> float:
    """||g C_T f||_{L^s(w)} / (w(I_T)^(1/s) size(T) density(T))."""
    r = lin.r
    if not 1 <= s <= conjugate(r) + 1e-12:
        raise ValueError(f"s must lie in [1, r'] = [1, {conjugate(r)}]")
    if len(T) == 0:
        raise DegenerateTree("degenerate tree instance: empty tree")
    inst = OperatorInstance(T.members, r, variant)
    lhs = lp_norm_weighted(g.values * linearized_operator(inst, f, lin).values, w, s)
    sz = size(T.members, f, w)
    dn = density(T.members, lin, g, w, r)
    den = w.measure(T.interval) ** (1.0 / s) * sz * dn
    if den == 0:
        if lhs == 0:
            return 0.0
        raise DegenerateTree("degenerate tree instance: zero size or density")
    return lhs / den


@dataclass
class MajorSubsets:
    F: np.ndarray
    G: np.ndarray
    case: int
    c0: float


def major_subsets(F, G, w: Weight, q: float | None = None, r: float | None = None) -> MajorSubsets:
    """Major subsets built from the weighted dyadic maximal function.

    The weight is rescaled so that max(w(F), w(G)) = 1; the removal
    threshold uses the smallest power-of-two constant that keeps a major
    subset.  ``q`` and ``r`` are accepted for interface symmetry; the
    construction does not depend on them.
    """
    F = np.asarray(getattr(F, "values", F)).astype(bool)
    G = np.asarray(getattr(G, "values", G)).astype(bool)
    wF, wG = w.mass(F), w.mass(G)
    if wF <= 0 or wG <= 0:
        raise ValueError("F and G must have positive weight")
    wn = w.scaled(1.0 / max(wF, wG))
    nF, nG = wn.mass(F), wn.mass(G)
    if nF <= nG:
        case, other, other_mass = 1, G, nF
        M = maximal_weighted(DyadicFunction(F.astype(float)), wn).values
    else:
        case, other, other_mass = 2, F, nG
        M = maximal_weighted(DyadicFunction(G.astype(float)), wn).values
    target = wn.mass(other) / 2
    c0 = 1.0
    while True:
        cut = other & ~(M > c0 * other_mass)
        if wn.mass(cut) > target:
            break
        c0 *= 2.0
    if case == 1:
        return MajorSubsets(F.copy(), cut, 1, c0)
    return MajorSubsets(cut, G.copy(), 2, c0)


def variational_partial_sums(f: DyadicFunction, r: float) -> DyadicFunction:
    """Cell-wise r-variation of S_{-1} f = 0, S_0 f, ..., S_{2^res - 1} f."""
    ladder = partial_sum_ladder(f)
    seq = np.vstack([np.zeros((1, ladder.shape[1])), ladder])
    return DyadicFunction(r_variation_rows(seq.T, r))


def direct_ratio(f: DyadicFunction, w: Weight, p: float, r: float) -> float:
    """||V^r(S_N f)||_{L^p(w)} / ||f||_{L^p(w)}."""
    nf = lp_norm_weighted(f, w, p)
    if nf == 0:
        raise ValueError("f must be nonzero")
    return lp_norm_weighted(variational_partial_sums(f, r), w, p) / nf
