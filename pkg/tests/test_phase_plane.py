import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walsh_lab.dyadic import DyadicFunction, inner, lp_norm_weighted
from walsh_lab.generators import (all_bitiles, make_weight, random_bitiles, random_function, random_linearization,
                                  random_tree)
from walsh_lab.phase_plane import (Bitile, BitileParseError, Linearization, Tree, bitile_less, bmo_sides,
                                   conjugate, counting_function, density, format_bitiles, parse_bitiles, size,
                                   split_tree, tree_square_function, weak_l1_norm)
from walsh_lab.walsh import packet, tile_less
from walsh_lab.weights import Weight, power_weight, uniform_weight


# -- brute-force oracles ---------------------------------------------------------

def size_oracle(B, f, w):
    """Enumerate every bitile as a top, build the maximal 2-overlapping tree
    from the tile order on upper tiles, and measure S_T f directly."""
    best = 0.0
    for Q in all_bitiles(f.res):
        T = [P for P in B if tile_less(P.upper, Q.upper)]
        if not T:
            continue
        S = tree_square_function(T, f)
        best = max(best, lp_norm_weighted(S, w, 2) / math.sqrt(w.measure(Q.interval)))
    return best


def density_oracle(B, lin, g, w, r):
    rp = conjugate(r)
    n = 1 << g.res
    best = 0.0
    for Q in all_bitiles(g.res):
        if not any(bitile_less(P, Q) for P in B):
            continue
        lo, hi = Q.freq
        total = 0.0
        for x in range(n)[Q.interval.cells(g.res)]:
            for N, a in zip(lin.freqs[x][1:], lin.coeffs[x]):
                if lo <= N < hi:
                    total += abs(g.values[x]) ** rp * abs(a) ** rp * w.values[x] / n
        best = max(best, total / w.measure(Q.interval))
    return best ** (1 / rp)


# -- bitiles and trees --------------------------------------------------------------

def test_bitile_geometry():
    P = Bitile(1, 1, 2)
    assert P.freq == (8, 12)
    assert (P.lower.n, P.upper.n) == (4, 5)
    assert P.resolvable(4) and not P.resolvable(3)
    assert not Bitile(3, 0, 0).resolvable(3)
    with pytest.raises(ValueError):
        Bitile(1, 2, 0)


def test_bitile_order_examples():
    top = Bitile(0, 0, 0)
    assert bitile_less(Bitile(1, 0, 0), top)
    assert bitile_less(top, top)
    assert not bitile_less(top, Bitile(1, 0, 0))
    assert not bitile_less(Bitile(1, 0, 1), top)


def test_tree_rejects_non_members():
    with pytest.raises(ValueError):
        Tree(Bitile(1, 0, 0), [Bitile(1, 1, 0)])


def test_split_tree_examples():
    top = Bitile(0, 0, 0)
    # P_2 of (1,0,0) is [2,4), inside top_2 = [1,2)? no -> 1-overlapping part
    lower_side = Bitile(1, 0, 0)
    # frequency [0,4) with upper tile [2,4): the top upper tile is [1,2)
    T1, T2 = split_tree(Tree(top, [top, lower_side]))
    assert T2.members == {top}
    assert T1.members == {lower_side}
    assert T2.is_two_overlapping() and T1.is_one_overlapping()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_split_tree_partitions(seed, res):
    T = random_tree(np.random.default_rng(seed), res)
    T1, T2 = split_tree(T)
    assert T1.members | T2.members == T.members and not T1.members & T2.members
    assert T1.is_one_overlapping() and T2.is_two_overlapping()


def test_counting_function_example():
    forest = [Tree(Bitile(0, 0, 0)), Tree(Bitile(1, 0, 0))]
    assert counting_function(forest, 2).values.tolist() == [2, 2, 1, 1]


# -- size -------------------------------------------------------------------------------

def test_size_of_singleton():
    res = 4
    rng = np.random.default_rng(0)
    f = DyadicFunction(rng.normal(size=16))
    w = power_weight(0.5, res)
    P = Bitile(1, 1, 2)
    c = inner(f, packet(P.lower, res))
    # S_T f = |c| |I_P|^(-1/2) on I_P, so the ratio at the top P is
    # |c| |I_P|^(-1/2) whatever the weight; larger tops only add weight below
    assert size([P], f, w) == pytest.approx(abs(c) / math.sqrt(P.interval.length))
    assert size([P], f, w) == pytest.approx(size_oracle([P], f, w))


def test_size_empty_and_zero():
    assert size([], DyadicFunction.constant(1.0, 3), uniform_weight(3)) == 0.0
    assert size([Bitile(0, 0, 1)], DyadicFunction.constant(0.0, 3), uniform_weight(3)) == 0.0


def test_size_unresolvable():
    with pytest.raises(ValueError, match="not resolvable"):
        size([Bitile(3, 0, 0)], DyadicFunction.constant(1.0, 3), uniform_weight(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.sampled_from([-0.5, 0.0, 0.5]))
def test_size_matches_bruteforce(seed, res, alpha):
    rng = np.random.default_rng(seed)
    B = random_bitiles(rng, res)
    f = random_function(rng, res)
    w = make_weight(alpha, res)
    assert size(B, f, w) == pytest.approx(size_oracle(B, f, w), rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_size_monotone_under_inclusion(seed, res):
    rng = np.random.default_rng(seed)
    B = random_bitiles(rng, res)
    sub = {P for P in B if rng.random() < 0.5}
    f = random_function(rng, res)
    w = make_weight(-0.5, res)
    assert size(sub, f, w) <= size(B, f, w) * (1 + 1e-12)


def test_size_is_scale_covariant():
    rng = np.random.default_rng(1)
    res = 4
    B = random_bitiles(rng, res)
    f = random_function(rng, res)
    w = power_weight(0.5, res)
    assert size(B, 3 * f, w) == pytest.approx(3 * size(B, f, w))
    # size is invariant under rescaling the weight
    assert size(B, f, w.scaled(7.0)) == pytest.approx(size(B, f, w))


# -- density ----------------------------------------------------------------------

def test_linearization_validation():
    with pytest.raises(ValueError, match="r'"):
        Linearization(1, 3.0, [[0, 1], []], [[0.5], []])
    with pytest.raises(ValueError, match="increasing"):
        Linearization(1, 3.0, [[1, 1], []], [[1.0], []])
    with pytest.raises(ValueError):
        Linearization(1, 3.0, [[0, 1, 2], []], [[1.0], []])
    lin = Linearization(1, 3.0, [[0, 2], []], [[-1.0], []])
    assert lin.counts.tolist() == [1, 0]


def test_density_example():
    res = 2
    w = uniform_weight(res)
    g = DyadicFunction.constant(1.0, res)
    r = 3.0
    # every cell jumps once, landing on frequency 1
    lin = Linearization(res, r, [[0, 1]] * 4, [[1.0]] * 4)
    # top Q = (0,0,0) has omega = [0,2): all of the mass over all of [0,1)
    assert density([Bitile(0, 0, 0)], lin, g, w, r) == pytest.approx(1.0)
    assert density([Bitile(0, 0, 1)], lin, g, w, r) == 0.0
    with pytest.raises(ValueError):
        density([Bitile(0, 0, 0)], lin, g, w, 2.0)
    with pytest.raises(ValueError, match="different r"):
        density([Bitile(0, 0, 0)], lin, g, w, 4.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.sampled_from([2.5, 3.0, 5.0]))
def test_density_matches_bruteforce(seed, res, r):
    rng = np.random.default_rng(seed)
    B = random_bitiles(rng, res)
    lin = random_linearization(rng, res, r)
    g = random_function(rng, res)
    w = make_weight(0.5, res)
    assert density(B, lin, g, w, r) == pytest.approx(density_oracle(B, lin, g, w, r), rel=1e-9, abs=1e-12)


# -- weak L1 and the BMO sides ----------------------------------------------------

def test_weak_l1_examples():
    w = uniform_weight(2)
    assert weak_l1_norm([4.0, 0.0, 0.0, 0.0], w) == pytest.approx(1.0)
    assert weak_l1_norm([1.0, 1.0, 1.0, 1.0], w) == pytest.approx(1.0)
    assert weak_l1_norm([2.0, 1.0, 0.0, 0.0], w) == pytest.approx(0.5)
    assert weak_l1_norm(np.zeros(4), w) == 0.0


def test_weak_l1_below_l1():
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.normal(size=32)
        w = Weight(rng.uniform(0.1, 3, size=32))
        assert weak_l1_norm(v, w) <= lp_norm_weighted(DyadicFunction(v), w, 1) + 1e-12


def test_bmo_sides_of_singleton():
    res = 3
    f = packet(Bitile(0, 0, 0).lower, res)
    lhs, rhs = bmo_sides([Bitile(0, 0, 0)], f, uniform_weight(res), 2.0)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(1.0)


# -- text format ----------------------------------------------------------------------

def test_parse_roundtrip():
    B = [Bitile(0, 0, 1), Bitile(2, 3, 0), Bitile(1, 1, 2)]
    text = format_bitiles(B, header="demo")
    assert text.startswith("# demo\n")
    assert sorted(parse_bitiles(text)) == sorted(B)


def test_parse_comments_and_blank_lines():
    assert parse_bitiles("\n# only a comment\n1 0 0  # trailing\n\n") == [Bitile(1, 0, 0)]
    assert parse_bitiles("") == []


@pytest.mark.parametrize("text,line", [("1 0 0\n1 0\n", 2), ("x 0 0\n", 1), ("0 0 0\n\n1 5 0\n", 3)])
def test_parse_errors_report_line(text, line):
    with pytest.raises(BitileParseError, match=f"line {line}:") as exc:
        parse_bitiles(text)
    assert exc.value.lineno == line
