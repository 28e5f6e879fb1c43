from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavedecay.weights import (
    SpacetimeSampleSet,
    WeightedNormParams,
    big_c1,
    big_c2,
    big_cm,
    bracket,
    c_pq,
    corollary_source_constant,
    little_c,
    log_weight,
    theorem_constants,
    weight,
    weighted_sup,
)

GRID = [Fraction(5, 2), Fraction(3), Fraction(4), Fraction(6)]


def _rational(expr):
    return float(expr)


def _within_ulp(a, b):
    return abs(a - b) <= math.ulp(b)


@pytest.mark.parametrize("p", GRID)
def test_single_index_constants_match_rational(p):
    assert _within_ulp(little_c(p), _rational(1 / (2 * (p - 2))))
    assert _within_ulp(big_c1(p), _rational(max(Fraction(9) / (2 * (p - 2)), Fraction(4))))
    assert _within_ulp(big_c2(p), _rational(max(Fraction(3) / (p - 1), Fraction(5))))
    assert _within_ulp(big_cm(p), _rational(max(Fraction(9) / (2 * (p - 2)), Fraction(5))))


@pytest.mark.parametrize("p", GRID)
@pytest.mark.parametrize("q", GRID)
def test_cone_constant_matches_rational(p, q):
    six = Fraction(6) ** int(q - 1) if (q - 1).denominator == 1 else Fraction(6.0 ** float(q - 1))
    ref = Fraction(3, 2) * six / (q - 2) * max(2 / (p - 1), Fraction(3))
    assert _within_ulp(c_pq(p, q), float(ref))


def test_frozen_constant_values():
    assert little_c(2.5) == 1.0 and little_c(6) == 0.125
    assert big_c1(2.5) == 9.0 and big_c1(4) == 4.0
    assert big_c2(3) == 5.0
    assert big_cm(4) == 5.0 and big_cm(2.5) == 9.0
    assert c_pq(3, 3) == 162.0
    assert c_pq(2.5, 2.5) == pytest.approx(9 * 6**1.5, rel=1e-15)


def test_model_configuration_constants():
    cs = theorem_constants(1, 1, 1, 4, 0.003, 3)
    assert cs.p == 3.0
    assert cs.delta == pytest.approx(0.486, abs=1e-15)
    assert cs.C_total == pytest.approx(15 / 0.514, rel=1e-14)
    assert round(cs.C_total, 2) == 29.18
    assert cs.contractive and cs.status == "contraction regime"


def test_outside_regime_is_flagged_not_raised():
    cs = theorem_constants(1, 1, 1, 4, 0.01, 3)
    assert not cs.contractive
    assert cs.C_total == math.inf
    assert cs.as_dict()["C_total"] is None
    assert cs.status == "outside contraction regime"


def test_zero_potential_gives_data_constant():
    cs = theorem_constants(1, 2, 3, 4, 0.0, 3)
    assert cs.delta == 0.0
    assert cs.C_total == 5.0 * 6


@pytest.mark.parametrize(
    "fn, bad",
    [(little_c, 2), (big_c1, 1.5), (big_c2, 1), (big_cm, 2)],
)
def test_domain_errors(fn, bad):
    with pytest.raises(ValueError):
        fn(bad)


def test_cone_constant_domain_errors():
    with pytest.raises(ValueError):
        c_pq(3, 2)
    with pytest.raises(ValueError):
        c_pq(1, 3)


def test_theorem_constants_hypotheses():
    with pytest.raises(ValueError):
        theorem_constants(1, 1, 1, 3, 0.003, 3)
    with pytest.raises(ValueError):
        theorem_constants(1, 1, 1, 4, 0.003, 2)
    with pytest.raises(ValueError):
        theorem_constants(-1, 1, 1, 4, 0.003, 3)


def test_source_constant():
    cs = corollary_source_constant(1, 1, 1, 1, 4, 3, 3, 3, 0.003)
    assert cs.C_source == 162.0
    assert cs.C_total == pytest.approx((15 + 162) / 0.514, rel=1e-14)
    with pytest.raises(ValueError):
        corollary_source_constant(1, 1, 1, 1, 4, 3, 3, 4, 0.003)  # r > q


def test_bracket_scalar_and_array():
    assert bracket(-2.0) == 3.0
    np.testing.assert_array_equal(bracket(np.array([-1.0, 0.0, 2.0])), [2.0, 1.0, 3.0])


def test_weight_values():
    prm = WeightedNormParams(1.0, 3.0)
    assert weight(0.0, 0.0, prm) == 1.0
    assert weight(2.0, 1.0, prm) == 4.0 * 2.0**2
    assert isinstance(weight(1.0, 1.0, prm), float)
    with pytest.raises(ValueError):
        weight(-1.0, 0.0, prm)
    with pytest.raises(ValueError):
        WeightedNormParams(4.0, 3.0)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 1e3),
    st.floats(0, 1e3),
    st.floats(0, 4),
    st.floats(0, 4),
)
def test_log_weight_consistent(t, x, r, extra):
    prm = WeightedNormParams(r, r + extra)
    assert math.log(weight(t, x, prm)) == pytest.approx(float(log_weight(t, x, prm)), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 3))
def test_weight_at_least_one_and_symmetric(t, x, p):
    prm = WeightedNormParams(min(1.0, p), p)
    assert weight(t, x, prm) >= 1.0
    assert weight(t, x, prm) == weight(x, t, prm)


def test_weighted_sup():
    prm = WeightedNormParams(1.0, 2.0)
    s = SpacetimeSampleSet([0.0, 1.0], [0.0, 1.0], [0.5, -0.25])
    assert weighted_sup(s, prm) == max(0.5, 0.25 * 3.0)
    with pytest.raises(ValueError):
        weighted_sup(SpacetimeSampleSet([], []), prm)


def test_sample_set_builders():
    s = SpacetimeSampleSet.tensor([0.0, 1.0], [2.0, 3.0, 4.0])
    assert len(s) == 6
    assert s.points[1] == (0.0, 3.0)
    s2 = SpacetimeSampleSet.from_points([(1.0, 2.0)], [5.0])
    assert s2.values[0] == 5.0
    with pytest.raises(ValueError):
        SpacetimeSampleSet([1.0], [-1.0])
    with pytest.raises(ValueError):
        SpacetimeSampleSet([1.0, 2.0], [1.0])
