import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walsh_lab.carleson import (SYMMETRIC, DegenerateTree, OperatorInstance, bilinear_form, carleson_variation,
                                direct_ratio, linearize, linearized_operator, major_subsets, tree_ratio,
                                variational_partial_sums)
from walsh_lab.dyadic import DyadicFunction, inner
from walsh_lab.generators import make_weight, random_bitiles, random_function, random_set, random_tree
from walsh_lab.phase_plane import Bitile, Tree
from walsh_lab.variation import r_variation
from walsh_lab.walsh import packet, partial_sum, walsh
from walsh_lab.weights import uniform_weight


def block_oracle(B, f, x, Np, N, variant="standard"):
    """B_x(N', N) straight from the definition, one bitile at a time."""
    total = 0.0
    for P in B:
        lo, hi = P.freq
        mid = lo + (1 << P.k)
        if not P.interval.left <= x / (1 << f.res) < P.interval.right:
            continue
        if variant == "standard":
            active = not lo <= Np < hi and mid <= N < hi
        else:
            active = lo <= Np < mid and not lo <= N < hi
        if active:
            phi = packet(P.lower, f.res)
            total += inner(f, phi) * phi.values[x]
    return total


def carleson_oracle(B, f, r, variant="standard"):
    """Enumerate every increasing frequency chain in 0..2^res."""
    K = 1 << f.res
    out = np.zeros(K)
    for x in range(K):
        best = 0.0
        for size in range(2, K + 2):
            for chain in itertools.combinations(range(K + 1), size):
                s = sum(abs(block_oracle(B, f, x, a, b, variant)) ** r for a, b in zip(chain, chain[1:]))
                best = max(best, s)
        out[x] = best ** (1 / r)
    return out


@pytest.mark.parametrize("variant", ["standard", SYMMETRIC])
def test_singletons_match_exhaustive_chains(variant):
    res = 2
    rng = np.random.default_rng(0)
    f = random_function(rng, res)
    for P in [Bitile(0, 0, 0), Bitile(0, 0, 1), Bitile(1, 1, 0)]:
        got = carleson_variation(OperatorInstance([P], 3.0, variant), f).values
        assert np.allclose(got, carleson_oracle([P], f, 3.0, variant), atol=1e-12)


@pytest.mark.parametrize("variant", ["standard", SYMMETRIC])
def test_random_collections_match_exhaustive_chains(variant):
    res = 2
    for seed in range(4):
        rng = np.random.default_rng(seed)
        B = random_bitiles(rng, res)
        f = random_function(rng, res)
        got = carleson_variation(OperatorInstance(B, 2.5, variant), f).values
        assert np.allclose(got, carleson_oracle(B, f, 2.5, variant), atol=1e-10)


def test_empty_collection_and_bad_r():
    f = DyadicFunction.constant(1.0, 3)
    assert np.array_equal(carleson_variation(OperatorInstance([], 3.0), f).values, np.zeros(8))
    with pytest.raises(ValueError):
        carleson_variation(OperatorInstance([Bitile(0, 0, 0)], 1.0), f)
    with pytest.raises(ValueError):
        OperatorInstance([], 3.0, variant="other")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.sampled_from([2.5, 3.0, 4.0]))
def test_linearization_attains_the_variation(seed, res, r):
    rng = np.random.default_rng(seed)
    inst = OperatorInstance(random_bitiles(rng, res), r)
    f = random_function(rng, res)
    C = carleson_variation(inst, f).values
    lin = linearize(inst, f)
    assert np.allclose(linearized_operator(inst, f, lin).values, C, atol=1e-10)
    # the bilinear form pairs the linearised operator with g w
    g = random_function(rng, res)
    w = make_weight(0.5, res)
    expect = float(np.dot(C, g.values * w.values)) / (1 << res)
    assert bilinear_form(inst, f, g, lin, w) == pytest.approx(expect, abs=1e-10)


def test_tree_ratio_degenerate():
    res = 3
    rng = np.random.default_rng(2)
    T = random_tree(rng, res)
    f = random_function(rng, res)
    inst = OperatorInstance(T.members, 3.0)
    lin = linearize(inst, f)
    with pytest.raises(DegenerateTree):
        tree_ratio(Tree(T.top), f, f, lin, uniform_weight(res), 1.0)
    with pytest.raises(ValueError):
        tree_ratio(T, f, f, lin, uniform_weight(res), 2.0)


def test_variational_partial_sums_examples():
    f = walsh(5, 4)
    assert np.allclose(variational_partial_sums(f, 3).values, 1.0)
    assert direct_ratio(f, uniform_weight(4), 2.0, 3.0) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    g = random_function(rng, 3)
    seq = [np.zeros(8)] + [partial_sum(g, N).values for N in range(8)]
    expect = [r_variation([s[x] for s in seq], 2.5) for x in range(8)]
    assert np.allclose(variational_partial_sums(g, 2.5).values, expect)
    with pytest.raises(ValueError):
        direct_ratio(DyadicFunction.constant(0.0, 3), uniform_weight(3), 2.0, 3.0)


def test_major_subsets():
    rng = np.random.default_rng(4)
    res = 6
    w = make_weight(-0.5, res)
    for _ in range(20):
        F, G = random_set(rng, res), random_set(rng, res)
        ms = major_subsets(F, G, w)
        wn = w.scaled(1.0 / max(w.mass(F), w.mass(G)))
        if ms.case == 1:
            assert np.array_equal(ms.F, F) and not np.any(ms.G & ~G)
            assert wn.mass(ms.G) > wn.mass(G) / 2
        else:
            assert np.array_equal(ms.G, G) and not np.any(ms.F & ~F)
            assert wn.mass(ms.F) > wn.mass(F) / 2
    with pytest.raises(ValueError):
        major_subsets(np.zeros(64, bool), G, w)
