import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walsh_lab.dyadic import DyadicFunction, DyadicInterval, conditional_expectation, haar
from walsh_lab.variation import (NotAStoppingTime, StoppingTime, jump_count, jump_count_exhaustive,
                                 jump_ratio, lepingle_ratio, martingale_variation_field, r_variation,
                                 r_variation_exhaustive, stopping_transform)
from walsh_lab.weights import uniform_weight

short_seqs = st.lists(st.floats(-5, 5), min_size=1, max_size=9)
exponents = st.sampled_from([1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 7.0])


def test_r_variation_examples():
    assert r_variation([0, 1, 0, 1], 2) == pytest.approx(math.sqrt(3))
    assert r_variation([0, 1, 0, 1], 1) == pytest.approx(3.0)
    assert r_variation([0, 1, 0, 1], np.inf) == pytest.approx(1.0)
    assert r_variation([4.2], 2) == 0.0
    assert r_variation([], 2) == 0.0
    # a monotone sequence is best taken in one jump once r >= 1
    assert r_variation([0, 1, 2, 3], 2) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        r_variation([0, 1], 0.5)


def test_jump_count_examples():
    assert jump_count([0, 1, 0, 1], 0.5) == 3
    assert jump_count([0, 1, 0, 1], 1.5) == 0
    assert jump_count([0, 1, 0, 1], 1.0) == 0  # gaps must exceed lambda strictly
    assert jump_count([0, 1, 0, 1], 0.999) == 3
    with pytest.raises(ValueError):
        jump_count([0, 1], 0.0)


@settings(max_examples=150, deadline=None)
@given(short_seqs, exponents)
def test_dp_matches_exhaustive(seq, r):
    dp, ex = r_variation(seq, r), r_variation_exhaustive(seq, r)
    assert dp == pytest.approx(ex, rel=1e-9, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(short_seqs, st.floats(0.01, 5.0))
def test_greedy_jumps_match_exhaustive(seq, lam):
    assert jump_count(seq, lam) == jump_count_exhaustive(seq, lam)


@settings(max_examples=100, deadline=None)
@given(short_seqs, st.floats(1.0, 5.0), st.floats(0.0, 4.0))
def test_variation_non_increasing_in_r(seq, r, dr):
    assert r_variation(seq, r + dr) <= r_variation(seq, r) * (1 + 1e-12) + 1e-12


@settings(max_examples=100, deadline=None)
@given(short_seqs, st.floats(0.01, 5.0))
def test_jumps_bounded_by_two_variation(seq, lam):
    # every counted jump contributes lam^2 to some chain's squared increments
    assert lam * math.sqrt(jump_count(seq, lam)) <= r_variation(seq, 2) * (1 + 1e-12) + 1e-12


def test_martingale_field_of_haar():
    h = haar(DyadicInterval(0, 0), 3)
    # E_0 h = 0 then E_k h = h for k >= 1: a single jump of size 1
    assert np.allclose(martingale_variation_field(h, 3).values, 1.0)


def test_lepingle_ratio_examples():
    h = haar(DyadicInterval(0, 0), 4)
    assert lepingle_ratio(h, uniform_weight(4), 2, 3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lepingle_ratio(h, uniform_weight(4), 2, 2)
    with pytest.raises(ValueError):
        lepingle_ratio(DyadicFunction.constant(0.0, 4), uniform_weight(4), 2, 3)
    assert jump_ratio(h, uniform_weight(4), 2, 0.5) == pytest.approx(0.5)
    assert jump_ratio(h, uniform_weight(4), 2, 1.5) == 0.0


def test_stopping_time_validation():
    StoppingTime([1, 1, 2, 2], 2)
    StoppingTime([0, 0, 0, 0], 2)
    with pytest.raises(NotAStoppingTime):
        StoppingTime([0, 1, 1, 1], 2)
    with pytest.raises(NotAStoppingTime):
        StoppingTime([3, 3, 3, 3], 2)


def test_stopping_transform_examples():
    rng = np.random.default_rng(0)
    f = DyadicFunction(rng.normal(size=16))
    stops = [StoppingTime.constant(0, 4), StoppingTime.constant(4, 4)]
    out = stopping_transform(f, stops, [1.0])
    assert np.allclose(out.values, f.values - f.mean())
    # constant stops reduce to a signed martingale transform
    stops = [StoppingTime.constant(k, 4) for k in range(5)]
    out = stopping_transform(f, stops, [1.0, 1.0, 1.0, 1.0])
    assert np.allclose(out.values, f.values - f.mean())
    mid = stopping_transform(f, [StoppingTime.constant(1, 4), StoppingTime.constant(2, 4)], [-1.0])
    assert np.allclose(mid.values, conditional_expectation(f, 1).values - conditional_expectation(f, 2).values)
    with pytest.raises(ValueError, match="non-decreasing"):
        stopping_transform(f, [StoppingTime.constant(2, 4), StoppingTime.constant(1, 4)], [1.0])
    with pytest.raises(ValueError):
        stopping_transform(f, stops, [1.0])
