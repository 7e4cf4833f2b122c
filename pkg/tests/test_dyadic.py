import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walsh_lab.dyadic import (DyadicFunction, DyadicInterval, all_intervals, conditional_expectation,
                              delta_project, expectation_ladder, haar, inner, lp_norm_weighted)
from walsh_lab.weights import Weight


def values_strategy(max_res=6):
    return st.integers(0, max_res).flatmap(
        lambda res: st.lists(st.floats(-10, 10, allow_nan=False), min_size=1 << res, max_size=1 << res))


# -- intervals ------------------------------------------------------------------

def test_interval_endpoints():
    I = DyadicInterval(2, 3)
    assert (I.left, I.right, I.length) == (0.75, 1.0, 0.25)
    assert I.parent() == DyadicInterval(1, 1)
    assert I.children() == (DyadicInterval(3, 6), DyadicInterval(3, 7))


def test_invalid_interval():
    with pytest.raises(ValueError):
        DyadicInterval(1, 2)


def test_nesting_dichotomy_all_pairs():
    intervals = list(all_intervals(5))
    for I, J in itertools.product(intervals, repeat=2):
        lo, hi = max(I.left, J.left), min(I.right, J.right)
        if hi <= lo:
            assert not I.intersects(J)
        else:
            assert (lo, hi) in {(I.left, I.right), (J.left, J.right)}
            assert I.contains(J) or J.contains(I)


# -- functions ----------------------------------------------------------------------

def test_function_validation():
    with pytest.raises(ValueError):
        DyadicFunction([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        DyadicFunction([1.0, np.nan])
    with pytest.raises(ValueError):
        DyadicFunction([1.0, 2.0], res=2)


def test_values_are_read_only():
    f = DyadicFunction([1.0, 2.0])
    with pytest.raises(ValueError):
        f.values[0] = 5.0


def test_refine_duplicates_values():
    f = DyadicFunction([1.0, 2.0]).refine(3)
    assert f.values.tolist() == [1, 1, 1, 1, 2, 2, 2, 2]


# -- Haar functions --------------------------------------------------------------

def test_haar_unit_interval():
    assert haar(DyadicInterval(0, 0), 1).values.tolist() == [1.0, -1.0]


def test_haar_half_interval():
    v = haar(DyadicInterval(1, 0), 2).values
    assert np.allclose(v, [math.sqrt(2), -math.sqrt(2), 0, 0])


def test_haar_unresolvable():
    with pytest.raises(ValueError, match="unresolvable"):
        haar(DyadicInterval(2, 0), 2)


def test_haar_orthonormal_basis():
    res = 5
    basis = [DyadicFunction.constant(1.0, res)]
    basis += [haar(I, res) for I in all_intervals(res - 1)]
    G = np.array([[inner(a, b) for b in basis] for a in basis])
    assert G.shape == (1 << res, 1 << res)
    assert np.allclose(G, np.eye(1 << res), atol=1e-10)


# -- inner products and norms -------------------------------------------------

def test_inner_examples():
    one = DyadicFunction.constant(1.0, 3)
    assert inner(one, one) == 1.0
    h = haar(DyadicInterval(0, 0), 3)
    assert inner(h, h) == pytest.approx(1.0)
    assert inner(DyadicFunction([1.0, 2.0]), DyadicFunction([3.0, 4.0])) == 5.5


def test_inner_resolution_mismatch():
    with pytest.raises(ValueError):
        inner(DyadicFunction([1.0, 2.0]), DyadicFunction([1.0, 2.0, 3.0, 4.0]))


def test_lp_norm_examples():
    w = Weight([0.5, 1.0, 2.0, 0.5])
    one = DyadicFunction.constant(1.0, 2)
    for p in (1, 1.5, 2, 7):
        assert lp_norm_weighted(one, w, p) == pytest.approx(w.total() ** (1 / p))
    assert lp_norm_weighted(DyadicFunction.constant(0.0, 2), w, 3) == 0.0
    assert lp_norm_weighted(DyadicFunction([1.0, 2.0]), Weight([1.0, 1.0]), 2) == pytest.approx(1.5811388, abs=1e-7)
    with pytest.raises(ValueError):
        lp_norm_weighted(one, w, 0.5)


# -- expectations and martingale differences -----------------------------------

def test_conditional_expectation_examples():
    f = DyadicFunction([1.0, 3.0])
    assert conditional_expectation(f, 0).values.tolist() == [2.0, 2.0]
    g = DyadicFunction(np.arange(8.0))
    assert np.array_equal(conditional_expectation(g, 3).values, g.values)
    assert np.allclose(conditional_expectation(g, 0).values, g.mean())
    with pytest.raises(ValueError):
        conditional_expectation(g, 4)


def test_delta_examples():
    res = 4
    c = DyadicFunction.constant(2.5, res)
    for j in range(1, res + 1):
        assert np.allclose(delta_project(c, j).values, 0)
    h = haar(DyadicInterval(0, 0), res)
    assert np.allclose(delta_project(h, 1).values, h.values)
    for j in range(2, res + 1):
        assert np.allclose(delta_project(h, j).values, 0)
    with pytest.raises(ValueError):
        delta_project(h, 0)


@settings(max_examples=60, deadline=None)
@given(values_strategy())
def test_telescoping_and_completeness(vals):
    f = DyadicFunction(vals)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    acc = conditional_expectation(f, 0).values.copy()
    for k in range(1, f.res + 1):
        acc += delta_project(f, k).values
        assert np.allclose(acc, conditional_expectation(f, k).values, atol=1e-10 * scale)
    assert np.allclose(acc, f.values, atol=1e-10 * scale)


@settings(max_examples=40, deadline=None)
@given(values_strategy(5).filter(lambda v: len(v) >= 2))
def test_projection_idempotence(vals):
    f = DyadicFunction(vals)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    for i in range(1, f.res + 1):
        di = delta_project(f, i)
        for j in range(1, f.res + 1):
            dj = delta_project(di, j).values
            expect = di.values if i == j else np.zeros_like(dj)
            assert np.allclose(dj, expect, atol=1e-10 * scale)


def test_expectation_ladder_rows():
    rng = np.random.default_rng(3)
    f = DyadicFunction(rng.normal(size=32))
    L = expectation_ladder(f.values)
    for k in range(6):
        assert np.allclose(L[k], conditional_expectation(f, k).values)
