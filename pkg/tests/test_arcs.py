from fractions import Fraction
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circle_lab.arcs import classify, dissect, farey, major_total_measure


def brute_farey(n):
    return sorted({Fraction(a, q) for q in range(1, n + 1) for a in range(0, q + 1)})


def totient(n):
    return sum(1 for a in range(1, n + 1) if gcd(a, n) == 1)


def merged_measure(d):
    """Union length in [0,1) of the arcs, by sorting and merging intervals mod 1."""
    pieces = []
    for arc in d.arcs:
        lo, hi = arc.interval
        for shift in (-1, 0, 1):
            a, b = max(lo + shift, Fraction(0)), min(hi + shift, Fraction(1))
            if a < b:
                pieces.append((a, b))
    pieces.sort()
    total, cur_lo, cur_hi = Fraction(0), None, None
    for a, b in pieces:
        if cur_hi is None or a > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = a, b
        else:
            cur_hi = max(cur_hi, b)
    return total + (cur_hi - cur_lo)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 20])
def test_farey_matches_brute(n):
    assert [Fraction(a, q) for a, q in farey(n)] == brute_farey(n)


def test_level_one():
    d = dissect(1, 3)
    assert d.rows() == [(0, 1, Fraction(0), Fraction(1, 12)), (1, 1, Fraction(1), Fraction(1, 12))]


def test_level_three_centres_and_gap():
    d = dissect(3, 3)
    assert [a.center for a in d.arcs] == [0, Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), 1]
    third, half = d.arc(1), d.arc(2)
    assert third.interval[1] < half.interval[0]


@pytest.mark.parametrize("n", [1, 5, 13, 40])
def test_cardinality(n):
    assert len(dissect(n, 3)) == 1 + sum(totient(q) for q in range(1, n + 1))


@pytest.mark.parametrize("n,k", [(4, 3), (9, 3), (12, 4), (6, 2)])
def test_disjoint_exact(n, k):
    arcs = dissect(n, k).arcs
    for x, y in zip(arcs, arcs[1:]):
        assert x.interval[1] < y.interval[0]
        assert y.center - x.center == Fraction(1, x.q * y.q)


def test_centre_is_major():
    d = dissect(10, 3)
    for arc in d.arcs[:-1]:
        got = classify(arc.center, d)
        assert (got.a, got.q) == (arc.a, arc.q)


def test_just_outside_half_arc():
    for n in (3, 5, 9):
        k = 3
        theta = Fraction(1, 2) + Fraction(2, 4 * k * 2 * n ** (k - 1))
        assert classify(theta, dissect(n, k)) is None


def test_closed_boundaries():
    d = dissect(6, 3)
    for arc in d.arcs[1:-1]:
        lo, hi = arc.interval
        assert classify(lo, d).q == arc.q and classify(hi, d).q == arc.q
        eps = Fraction(1, 10**30)
        assert classify(lo - eps, d) is None and classify(hi + eps, d) is None


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10**9), st.integers(1, 12))
def test_classify_vs_linear_scan(num, n):
    theta = Fraction(num % 10**9, 10**9)
    d = dissect(n, 3)
    hits = [a for a in d.arcs if abs(theta - a.center) <= a.radius]
    got = classify(theta, d)
    if hits:
        assert got is not None and (got.a, got.q) == (hits[0].a, hits[0].q)
        assert abs(theta - got.center) <= got.radius
    else:
        assert got is None


def test_float_input_snaps_exactly():
    d = dissect(8, 3)
    rng = np.random.default_rng(3)
    for t in rng.uniform(0, 1, 500):
        a, b = classify(float(t), d), classify(Fraction(float(t)), d)
        assert a == b


@pytest.mark.parametrize("n,k", [(1, 3), (3, 3), (7, 3), (5, 4), (4, 5)])
def test_measure_matches_merge(n, k):
    d = dissect(n, k)
    major, minor = major_total_measure(d)
    assert major == merged_measure(d)
    assert major + minor == 1


def test_measure_level_one():
    assert major_total_measure(dissect(1, 3))[0] == Fraction(1, 6)


@pytest.mark.parametrize("n", [1, 2, 5, 30, 100])
def test_measure_below_one_and_monotone(n):
    m3 = major_total_measure(dissect(n, 3))[0]
    m4 = major_total_measure(dissect(n, 4))[0]
    m5 = major_total_measure(dissect(n, 5))[0]
    assert m3 < 1
    assert m5 < m4 < m3
