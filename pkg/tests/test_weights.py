import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walsh_lab.dyadic import DyadicFunction, DyadicInterval, block_means
from walsh_lab.weights import (Weight, ap_characteristic, maximal_dyadic, maximal_l2, maximal_weighted,
                               power_weight, sharp_dyadic, uniform_weight)

positive_weights = st.integers(0, 6).flatmap(
    lambda r: st.lists(st.floats(0.01, 100.0), min_size=1 << r, max_size=1 << r))


def test_weight_must_be_positive():
    with pytest.raises(ValueError):
        Weight([1.0, 0.0])
    with pytest.raises(ValueError):
        Weight([1.0, -2.0])


def test_measure_and_mass():
    w = Weight([0.5, 1.0, 2.0, 0.5])
    assert w.total() == pytest.approx(1.0)
    assert w.measure(DyadicInterval(1, 1)) == pytest.approx(0.625)
    assert w.mass(np.array([True, False, True, False])) == pytest.approx(0.625)
    assert np.allclose(w.interval_masses(1), [0.375, 0.625])


def test_power_weight_examples():
    assert np.allclose(power_weight(1.0, 1).values, [0.25, 0.75])
    assert np.allclose(power_weight(0.0, 5).values, 1.0)
    # cell averages integrate to the exact total 1 / (alpha + 1)
    for alpha in (-0.5, 0.5, 2.0):
        assert power_weight(alpha, 8).total() == pytest.approx(1 / (alpha + 1))
    with pytest.raises(ValueError):
        power_weight(-1.0, 3)


def test_ap_characteristic_examples():
    assert ap_characteristic(uniform_weight(6), 2.0) == pytest.approx(1.0)
    assert ap_characteristic(Weight([0.5, 1.5]), 2.0) == pytest.approx(4 / 3)
    with pytest.raises(ValueError):
        ap_characteristic(uniform_weight(2), 1.0)


def ap_bruteforce(w, p):
    best = 0.0
    for k in range(w.res + 1):
        for m in range(1 << k):
            c = w.values[DyadicInterval(k, m).cells(w.res)]
            best = max(best, c.mean() * np.mean(c ** (-1 / (p - 1))) ** (p - 1))
    return best


@settings(max_examples=60, deadline=None)
@given(positive_weights, st.floats(1.1, 6.0))
def test_ap_properties(vals, p):
    w = Weight(vals)
    a = ap_characteristic(w, p)
    assert a >= 1.0 - 1e-12
    assert a == pytest.approx(ap_bruteforce(w, p), rel=1e-9)
    # A_p classes increase with p, so the characteristic is non-increasing
    assert ap_characteristic(w, p + 0.5) <= a * (1 + 1e-9)


def test_maximal_examples():
    f = DyadicFunction([1.0, 0.0])
    assert np.allclose(maximal_dyadic(f).values, [1.0, 0.5])
    assert np.allclose(maximal_l2(f).values, [1.0, math.sqrt(0.5)])
    assert np.allclose(sharp_dyadic(f).values, [0.5, 0.5])
    c = DyadicFunction.constant(3.0, 4)
    assert np.allclose(sharp_dyadic(c).values, 0.0)
    assert np.allclose(maximal_weighted(c, power_weight(0.5, 4)).values, 3.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6).flatmap(lambda r: st.lists(st.floats(-10, 10), min_size=1 << r, max_size=1 << r)))
def test_maximal_pointwise_orderings(vals):
    f = DyadicFunction(vals)
    M, M2 = maximal_dyadic(f).values, maximal_l2(f).values
    assert np.all(np.abs(f.values) <= M + 1e-12)
    assert np.all(M <= M2 + 1e-9)
    assert np.all(sharp_dyadic(f).values <= 2 * M + 1e-9)
    # the maximal function dominates every scale average of |f|
    for k in range(f.res + 1):
        assert np.all(np.repeat(block_means(np.abs(f.values), k), 1 << (f.res - k)) <= M + 1e-12)
