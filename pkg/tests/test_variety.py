import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from brkl.errors import (
    BadDimensions,
    DualUndefined,
    EmptyGraph,
    ExponentBelowTwo,
    NonIncreasingExponents,
    NonPositiveAlpha,
    OddLeadingExponent,
)
from brkl.variety import (
    critical_exponent,
    dual_endpoint,
    exponent_report,
    herz_exponent,
    integrability_threshold,
    knapp_exponent,
    make_variety,
    mockenhoupt_alpha_threshold,
    validate_variety,
)

alphas = st.fractions(min_value=Fraction(1, 100), max_value=Fraction(5))


def test_valid_configs():
    v = validate_variety({"n": 1, "L": 2, "L1": 1, "d": [2], "delta": 0.5})
    assert (v.n, v.L, v.L1, v.L2, v.N, v.d) == (1, 2, 1, 1, 3, (2,))
    w = validate_variety({"n": 2, "L": 2, "L1": 2, "d": [2, 4], "delta": 0.5})
    assert w.D == 6 and w.L2 == 0


@pytest.mark.parametrize(
    "raw, err",
    [
        ({"n": 1, "L": 1, "L1": 1, "d": [3]}, OddLeadingExponent),
        ({"n": 1, "L": 2, "L1": 2, "d": [4, 2]}, NonIncreasingExponents),
        ({"n": 1, "L": 2, "L1": 2, "d": [2, 2]}, NonIncreasingExponents),
        ({"n": 1, "L": 1, "L1": 1, "d": [1]}, ExponentBelowTwo),
        ({"n": 1, "L": 1, "L1": 0, "d": []}, EmptyGraph),
        ({"n": 0, "L": 1, "L1": 1, "d": [2]}, BadDimensions),
        ({"n": 1, "L": 1, "L1": 2, "d": [2, 4]}, BadDimensions),
    ],
)
def test_invalid_configs(raw, err):
    with pytest.raises(err):
        validate_variety(raw)


def test_critical_exponent_examples():
    assert integrability_threshold(1, 1, 0) == Fraction(4, 3) == herz_exponent(2, 0)
    assert critical_exponent(make_variety(2, 1, [2]), Fraction(1, 2)) == Fraction(6, 5)
    assert critical_exponent(make_variety(1, 2, [2], L1=1), Fraction(1, 4)) == Fraction(12, 11)
    with pytest.raises(NonPositiveAlpha):
        critical_exponent(make_variety(1, 1, [2]), 0)


def test_knapp_examples():
    assert knapp_exponent(make_variety(1, 2, [2, 3])) == 12
    assert knapp_exponent(make_variety(1, 3, [2, 3, 4])) == 20
    assert knapp_exponent(make_variety(2, 1, [2])) == 4


def test_mockenhoupt_examples():
    assert mockenhoupt_alpha_threshold(2, 1, 2) == 0
    assert mockenhoupt_alpha_threshold(1, 2, 1) == Fraction(1, 2)
    # the threshold at p = p_star_sub(alpha) for p < 2 recovers alpha (when alpha < n/2)
    alpha = Fraction(1, 4)
    p = integrability_threshold(1, 1, alpha)
    assert mockenhoupt_alpha_threshold(1, 1, p) == alpha


def test_report_examples():
    r = exponent_report(make_variety(1, 2, [2], L1=1), Fraction(1, 4))
    assert r.p_star == Fraction(12, 11) and r.p_star_sub == Fraction(8, 7) and r.gap_flag
    r = exponent_report(make_variety(1, 1, [2]), Fraction(1, 4))
    assert r.p_star == r.p_star_sub == Fraction(8, 7) and not r.gap_flag
    r = exponent_report(make_variety(2, 3, [14], L1=1), 0.5)
    assert r.hypothesis_met and r.status == "proven"
    r = exponent_report(make_variety(2, 1, [2]), 0.5)
    assert not r.hypothesis_met and r.status == "conjectural"


def test_open_ended_range():
    v = make_variety(1, 1, [2])
    with pytest.raises(DualUndefined):
        dual_endpoint(1, 1, 2)
    r = exponent_report(v, 2)
    assert r.operator_range[1] is None and math.isinf(r.csv_row()["op_hi"])


def test_float_alpha_is_exact():
    assert critical_exponent(make_variety(1, 2, [2], L1=1), 0.25) == Fraction(12, 11)


@given(st.integers(1, 9), alphas)
def test_herz_consistency(n, alpha):
    assert critical_exponent(make_variety(n, 1, [2]), alpha) == herz_exponent(n + 1, alpha)


@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 3), alphas)
def test_sub_threshold_dominates(n, L1, extra, alpha):
    L = L1 + extra
    v = make_variety(n, L, list(range(2, 2 + L1)), L1=L1)
    r = exponent_report(v, alpha)
    assert r.gap_flag == (L1 < L and alpha < Fraction(n, 2))
    if alpha < Fraction(n, 2):
        assert r.p_star_sub >= r.p_star
        assert (r.p_star_sub > r.p_star) == (L1 < L)


@given(st.integers(1, 6), st.integers(1, 4), alphas, alphas)
def test_monotone_in_alpha(n, L, a1, a2):
    if a1 == a2:
        return
    lo, hi = sorted((a1, a2))
    assert integrability_threshold(n, L, lo) > integrability_threshold(n, L, hi)


@given(st.integers(1, 6), st.integers(1, 5), alphas)
def test_monotone_in_codimension(n, L, alpha):
    # (L+n)/(L+alpha+n/2) increases in L exactly when alpha > n/2
    a, b = integrability_threshold(n, L, alpha), integrability_threshold(n, L + 1, alpha)
    if alpha > Fraction(n, 2):
        assert b > a
    elif alpha < Fraction(n, 2):
        assert b < a
    else:
        assert a == b


@pytest.mark.parametrize("dmax", range(2, 9))
def test_knapp_moment_curve(dmax):
    v = make_variety(1, dmax - 1, list(range(2, dmax + 1)))
    assert knapp_exponent(v) == dmax * (dmax + 1)
