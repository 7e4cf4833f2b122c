"""Invariant checks run by ``walsh-lab verify`` and the acceptance suite.

Each check returns a :class:`CheckResult`; randomized checks record the
sub-seed of every failing instance so it can be replayed with
``trial_rng(seed, trial)``.  ``fault=True`` perturbs the quantity under
test, which must make the check fail (a test of the harness itself).
"""
from __future__ import annotations

import functools
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicFunction, DyadicInterval, conditional_expectation, delta_project, haar, inner
from .generators import (random_bitiles, random_disjoint_tiles, random_function, random_set, signed_indicator,
                         trial_rng, trial_seed, make_weight)
from .carleson import OperatorInstance, linearize
from .phase_plane import density, size
from .selection import pairwise_disjoint_tiles, select_by_density, select_by_size
from .variation import jump_count, jump_count_exhaustive, r_variation, r_variation_exhaustive
from .walsh import (Tile, _walsh_values, hadamard_sums, haar_factorization, packet, partial_sum,
                    tile_less, tile_square_function, tiles_intersect, walsh_matrix)
from .weights import maximal_l2, sharp_dyadic


@dataclass
class CheckResult:
    name: str
    instances: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.instances > 0 and not self.failures

    def fail(self, detail: str, seed: int | None = None):
        self.failures.append((seed, detail))


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        out.seconds = time.perf_counter() - t0
        return out
    return wrapper


# -- exactness ---------------------------------------------------------------

@_timed
def check_orthonormality(max_res: int = 12, fault: bool = False) -> CheckResult:
    """Integer Gram matrices sum_i W_n(i) W_k(i) = 2^res delta_nk, exactly."""
    out = CheckResult("walsh orthonormality")
    for res in range(max_res + 1):
        M = walsh_matrix(res)
        if fault and res == max_res:
            M = M.copy()
            M[1, 0] = -M[1, 0]
        # rows must agree with the doubling recursion (all rows for small res)
        rows = range(1 << res) if res <= 8 else range(0, 1 << res, 97)
        for n in rows:
            if not np.array_equal(M[n], _walsh_values(n, res).astype(np.int64)):
                out.fail(f"row {n} of the Walsh matrix at res {res} differs from the recursion")
                break
        gram = hadamard_sums(M)
        if not np.array_equal(gram, (1 << res) * np.eye(1 << res, dtype=np.int64)):
            out.fail(f"Gram matrix at res {res} is not 2^res I")
        out.instances += 1
    return out


@_timed
def check_haar(seed: int = 0, trials: int = 50, max_res: int = 7, fault: bool = False) -> CheckResult:
    """f = E_0 f + sum_I <f,h_I> h_I and E_j - E_(j-1) = sum_{|I| = 2^(1-j)} <f,h_I>h_I."""
    out = CheckResult("haar completeness")
    for t in range(trials):
        res = 1 + t % max_res
        rng = trial_rng(seed, t)
        f = DyadicFunction(rng.normal(size=1 << res))
        recon = conditional_expectation(f, 0).values.copy()
        for j in range(1, res + 1):
            layer = np.zeros(1 << res)
            for m in range(1 << (j - 1)):
                h = haar(DyadicInterval(j - 1, m), res)
                layer += inner(f, h) * h.values
            if fault:
                layer *= 1.0 + 1e-6
            if not np.allclose(layer, delta_project(f, j).values, atol=1e-10, rtol=0):
                out.fail(f"martingale difference at scale {j} (res {res})", trial_seed(seed, t))
            recon += layer
        if not np.allclose(recon, f.values, atol=1e-10, rtol=0):
            out.fail(f"Haar reconstruction (res {res})", trial_seed(seed, t))
        out.instances += 1
    return out


def all_tiles(res: int) -> list[Tile]:
    return [Tile(k, m, n) for k in range(res + 1) for m in range(1 << k) for n in range(1 << (res - k))]


@_timed
def check_walsh_haar(max_res: int = 6, fault: bool = False) -> CheckResult:
    """phi_p = c 1_I phi_q and phi_p' = c' |I|^1/2 h_I phi_q, |c| = |c'| = (|I_q|/|I|)^1/2,
    for every sibling pair (p, p') and tile q > p."""
    out = CheckResult("walsh-haar factorisation")
    for res in range(1, max_res + 1):
        tiles = all_tiles(res)
        for p in tiles:
            if p.k >= res:
                continue
            sib = Tile(p.k, p.m, p.n ^ 1)
            for q in tiles:
                if not tile_less(p, q):
                    continue
                try:
                    c1, c2 = haar_factorization(p, sib, q, res)
                except ArithmeticError as exc:
                    out.fail(str(exc))
                    continue
                expect = 2.0 ** ((p.k - q.k) / 2)
                if fault:
                    c1 *= 1.001
                if abs(abs(c1) - expect) > 1e-10 or abs(abs(c2) - expect) > 1e-10:
                    out.fail(f"|c| for {p}, {sib}, {q}: {c1}, {c2} vs {expect}")
                out.instances += 1
    return out


@_timed
def check_packet_orthogonality(max_res: int = 5, fault: bool = False) -> CheckResult:
    """<phi_p, phi_q> = 0 exactly when the tiles are disjoint; ||phi_p|| = 1."""
    out = CheckResult("packet orthogonality")
    for res in range(max_res + 1):
        tiles = all_tiles(res)
        P = np.array([packet(t, res).values for t in tiles])
        G = P @ P.T / (1 << res)
        if fault and res == max_res:
            G[0, 1] = G[1, 0] = 0.0 if tiles_intersect(tiles[0], tiles[1]) else 0.5
        if not np.allclose(np.diag(G), 1.0, atol=1e-12):
            out.fail(f"packet norms at res {res}")
        for i, j in itertools.combinations(range(len(tiles)), 2):
            orth = abs(G[i, j]) < 1e-12
            if orth == tiles_intersect(tiles[i], tiles[j]):
                out.fail(f"{tiles[i]}, {tiles[j]}: inner product {G[i, j]:.3g}")
            out.instances += 1
    return out


# -- dynamic programs against enumeration -----------------------------------

@_timed
def check_variation_oracles(seed: int = 0, trials: int = 1000, fault: bool = False) -> CheckResult:
    """DP r-variation and greedy jump count equal brute force over all chains."""
    out = CheckResult("variation oracles")
    for t in range(trials):
        rng = trial_rng(seed, t)
        K = int(rng.integers(1, 13))
        a = rng.normal(size=K) if t % 2 else rng.integers(-3, 4, size=K).astype(float)
        for r in (1.0, 1.5, 2.0, 3.0, np.inf):
            dp = r_variation(a, r) + (1e-6 if fault else 0.0)
            ex = r_variation_exhaustive(a, r)
            if not abs(dp - ex) <= 1e-9 * max(1.0, ex):
                out.fail(f"r={r}: dp {dp} vs exhaustive {ex} for {a.tolist()}", trial_seed(seed, t))
        lam = float(rng.uniform(0.05, 2.0))
        if jump_count(a, lam) != jump_count_exhaustive(a, lam):
            out.fail(f"jump count at lambda={lam} for {a.tolist()}", trial_seed(seed, t))
        out.instances += 1
    return out


@_timed
def check_partial_sums(seed: int = 0, max_res: int = 8, fault: bool = False) -> CheckResult:
    """S_(2^k - 1) f = E_k f."""
    out = CheckResult("partial sums vs expectations")
    for res in range(max_res + 1):
        f = random_function(trial_rng(seed, res), res)
        for k in range(res + 1):
            S = partial_sum(f, (1 << k) - 1).values
            E = conditional_expectation(f, k).values + (1e-6 if fault else 0.0)
            if not np.allclose(S, E, atol=1e-10, rtol=0):
                out.fail(f"S_(2^{k}-1) f != E_{k} f at res {res}", trial_seed(seed, res))
            out.instances += 1
    return out


# -- pointwise sharp bound ----------------------------------------------------

@_timed
def check_sharp_m2(seed: int = 0, trials: int = 1000, max_res: int = 8, fault: bool = False) -> CheckResult:
    """sharp(S_D f) <= 2 M_2 f cell-wise for random disjoint tile sets D."""
    out = CheckResult("sharp function bound")
    for t in range(trials):
        rng = trial_rng(seed, t)
        res = int(rng.integers(1, max_res + 1))
        D = random_disjoint_tiles(rng, res)
        f = random_function(rng, res) if t % 2 else signed_indicator(rng, random_set(rng, res))
        lhs = sharp_dyadic(tile_square_function(D, f)).values
        rhs = 2 * maximal_l2(f).values * (0.25 if fault else 1.0)
        bad = np.nonzero(lhs > rhs + 1e-12)[0]
        if bad.size:
            out.fail(f"{bad.size} cells violate the bound (res {res}, |D| = {len(D)})", trial_seed(seed, t))
        out.instances += 1
    return out


# -- selection postconditions -----------------------------------------------

@_timed
def check_selection(seed: int = 0, trials: int = 500, max_res: int = 6, fault: bool = False) -> CheckResult:
    """Residual size < sigma/2 (rechecked by the size op), D-tiles disjoint,
    exact partition; residual density < lambda/2."""
    out = CheckResult("selection postconditions")
    r = 3.0
    for t in range(trials):
        rng = trial_rng(seed, t)
        res = int(rng.integers(2, max_res + 1))
        alpha = (-0.5, 0.0, 0.5)[t % 3]
        w = make_weight(alpha, res)
        B = random_bitiles(rng, res)
        f = random_function(rng, res) if t % 2 else signed_indicator(rng, random_set(rng, res))
        s0 = size(B, f, w)
        sid = trial_seed(seed, t)
        if s0 > 0:
            sigma = s0 * float(rng.uniform(0.1, 2.5))
            resid, forest = select_by_size(B, f, w, sigma)
            s1 = size(resid, f, w) * (4.0 if fault else 1.0)
            if not s1 < sigma / 2:
                out.fail(f"size(residual) = {s1} >= sigma/2 = {sigma / 2}", sid)
            if not pairwise_disjoint_tiles(forest.lower_tiles()):
                out.fail("lower tiles of the 2-overlapping parts intersect", sid)
            if resid | forest.members() != B or len(resid) + sum(len(T) for T in forest.trees) != len(B):
                out.fail("size selection does not partition the collection", sid)
        g = signed_indicator(rng, random_set(rng, res))
        lin = linearize(OperatorInstance(B, r), random_function(rng, res))
        d0 = density(B, lin, g, w, r)
        if d0 > 0:
            lam = d0 * float(rng.uniform(0.1, 2.5))
            resid, forest = select_by_density(B, lin, g, w, r, lam)
            d1 = density(resid, lin, g, w, r)
            if not d1 < lam / 2:
                out.fail(f"density(residual) = {d1} >= lambda/2 = {lam / 2}", sid)
            if resid | forest.members() != B or len(resid) + sum(len(T) for T in forest.trees) != len(B):
                out.fail("density selection does not partition the collection", sid)
        out.instances += 1
    return out


CHECKS = {
    "orthonormality": check_orthonormality,
    "haar": check_haar,
    "walsh-haar": check_walsh_haar,
    "packet-orthogonality": check_packet_orthogonality,
    "variation-oracles": check_variation_oracles,
    "partial-sums": check_partial_sums,
    "sharp-m2": check_sharp_m2,
    "selection": check_selection,
}
