from fractions import Fraction
from math import floor, sqrt

import pytest
from hypothesis import given, strategies as st

from circle_lab.errors import PreconditionError
from circle_lab.exponents import (
    FormParams, alpha_p, beta_p, d0, d0_star, d0_with_index, d1, delta0, delta0_info, delta_r,
    exponent_budget, gamma, l0, p0, r1, table1, tau,
)


def scan_d0(k):
    """Independent j-scan returning every maximiser."""
    vals = {j: Fraction(k * j - min(2**j + 2, j * j + j), k - j + 1) for j in range(2, k)}
    m = max(vals.values())
    return k * k - m, sorted(j for j, v in vals.items() if v == m)


@pytest.mark.parametrize("k,expected", [(3, 9), (4, 15), (5, Fraction(70, 3))])
def test_d0_examples(k, expected):
    assert d0(k) == expected


def test_d0_maximisers():
    assert l0(4) == 3 and l0(5) == 3


@pytest.mark.parametrize("k", range(3, 31))
def test_d0_matches_scan_and_smallest_tie(k):
    val, maximisers = scan_d0(k)
    assert d0_with_index(k) == (val, maximisers[0])


def test_table1_row():
    assert [r[2] for r in table1()] == [10, 16, 24, 35, 47, 62, 79, 97]
    assert d0_star(3) == 10 and d0_star(6) == 35 and d0_star(10) == 97


def test_d0_star_k3_exceeds_k_squared():
    assert d0_star(3) == 10 > 3 * 3


def test_d0_rejects_k2():
    with pytest.raises(PreconditionError):
        d0(2)


@pytest.mark.parametrize("k", range(3, 31))
def test_d0_star_ranges(k):
    s = d0_star(k)
    assert s == 1 + floor(d0(k))
    assert Fraction(3 * k, 2) <= s
    assert d0(k) <= k * k
    if k >= 4:
        # at k = 3 the threshold d0 = 9 is an integer, so d0_star = 10 exceeds k^2
        assert s <= k * k
    if k >= 10:
        assert abs(s - (k * k - k)) <= 4 * sqrt(k)


def test_tau():
    assert tau(3) == Fraction(1, 4)
    assert tau(4) == Fraction(1, 8)
    assert tau(6) == Fraction(1, 30)


@pytest.mark.parametrize("d,k,expected", [(9, 3, 0), (12, 3, Fraction(1, 3)), (13, 3, Fraction(5, 12))])
def test_delta0_examples(d, k, expected):
    assert delta0(FormParams(k, d)) == expected


def test_delta0_regimes():
    assert delta0_info(FormParams(3, 5)).regime == "below"
    assert delta0_info(FormParams(3, 5)).value < 0
    assert delta0_info(FormParams(3, 10)).regime == "interpolated"
    assert delta0_info(FormParams(3, 20)).regime == "large"


@pytest.mark.parametrize("d,k,expected", [(10, 3, Fraction(20, 11)), (12, 3, Fraction(8, 5))])
def test_p0_examples(d, k, expected):
    assert p0(FormParams(k, d)) == expected


def test_p0_rejects_small_d():
    with pytest.raises(PreconditionError):
        p0(FormParams(3, 3))


@given(st.integers(3, 12), st.integers(1, 200))
def test_p0_is_max_of_branches(k, extra):
    params = FormParams(k, k + extra)
    d = params.d
    dl = delta0(params)
    if 1 + 2 * dl <= 0:
        with pytest.raises(PreconditionError):
            p0(params)
        return
    assert p0(params) == max(Fraction(d, d - k), 1 + 1 / (1 + 2 * dl))


@pytest.mark.parametrize("k", [3, 4, 5, 7])
def test_p0_non_increasing_and_tends_to_one(k):
    start = floor(d0(k)) + 1
    vals = [p0(FormParams(k, d)) for d in range(max(start, k + 1), 400)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(v > 1 for v in vals)
    assert 1 < p0(FormParams(k, 10**5)) < Fraction(101, 100)
    assert all(0 < v < 2 for v in vals)


@pytest.mark.parametrize("k,l,expected", [(3, 2, 9), (4, 3, 15)])
def test_r1_examples(k, l, expected):
    assert r1(k, l) == expected


@pytest.mark.parametrize("k", range(3, 12))
def test_delta_r_endpoints(k):
    for l in range(2, k):
        assert delta_r(r1(k, l), k, l) == 0
        assert delta_r(k * k + k, k, l) == 1


def test_r1_rejects_bad_l():
    with pytest.raises(PreconditionError):
        r1(5, 5)
    with pytest.raises(PreconditionError):
        r1(5, 1)


@pytest.mark.parametrize("k", range(3, 11))
def test_delta_r_is_k_delta0(k):
    lz = l0(k)
    for d in range(floor(d0(k)) + 1, k * k + k + 1):
        assert delta_r(d, k, lz) == k * delta0(FormParams(k, d))


def test_alpha_examples():
    assert alpha_p(2, 0).value == 0
    assert alpha_p(2, Fraction(1, 3)).value == Fraction(1, 3)
    assert alpha_p(2, Fraction(1, 3)).positive


@given(st.fractions(min_value=0, max_value=5))
def test_alpha_vanishes_at_threshold(delta):
    assert alpha_p(1 + 1 / (1 + 2 * delta), delta).value == 0


def test_alpha_rejects_p():
    with pytest.raises(PreconditionError):
        alpha_p(1, 0)
    with pytest.raises(PreconditionError):
        alpha_p(Fraction(5, 2), 0)


def test_gamma_and_beta():
    assert gamma(FormParams(3, 7)) == Fraction(1, 3)
    assert gamma(FormParams(3, 10)) == Fraction(1, 2)
    p = FormParams(3, 10)
    assert beta_p(Fraction(10, 7), p) == 0
    assert beta_p(2, p) > 0


def test_d1_constants():
    assert d1(3) == 13
    assert d1(5) == 33


@given(st.integers(3, 15), st.integers(4, 300))
def test_budget_invariants_and_repeatability(k, d):
    b = exponent_budget(FormParams(k, d))
    assert b == exponent_budget(FormParams(k, d))
    assert b.d0_star == 1 + floor(b.d0)
    assert b.tau == max(Fraction(2, 2**k), Fraction(1, k * k - k))
    assert b.gamma == min(Fraction(d, k) - 2, Fraction(1, 2))
    if d > b.d0 and d > k:
        assert 0 < b.p0 < 2


def test_form_params_validation():
    with pytest.raises(PreconditionError):
        FormParams(1, 3)
    with pytest.raises(PreconditionError):
        FormParams(3, 0)
