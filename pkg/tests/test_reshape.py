import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pfilter.reshape import (
    BY, DiscreteMeasure, Identity, dump_reshape, parse_reshape, reshape_eval, reshape_inverse,
)

TWO_ATOMS = DiscreteMeasure(((1.0, 0.5), (2.0, 0.5)))


def test_identity_eval():
    assert reshape_eval(Identity(), 3.5) == 3.5


def test_by_eval_matches_harmonic():
    # H_4 = 25/12, so beta(2) = 2 * 12/25
    expected = float(Fraction(2) / (Fraction(1) + Fraction(1, 2) + Fraction(1, 3) + Fraction(1, 4)))
    assert reshape_eval(BY(4), 2) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.96)
    assert BY(4).harmonic == pytest.approx(25 / 12, rel=1e-15)


def test_discrete_eval_truncated_first_moment():
    assert reshape_eval(TWO_ATOMS, 1.5) == 0.5
    assert reshape_eval(TWO_ATOMS, 0.999) == 0.0
    assert reshape_eval(TWO_ATOMS, 2.0) == 1.5


def test_eval_rejects_negative():
    with pytest.raises(ValueError):
        reshape_eval(Identity(), -1)


def test_inverse_examples():
    assert reshape_inverse(Identity(), 0.3) == 0.3
    assert reshape_inverse(BY(4), 0.96) == pytest.approx(2.0, rel=1e-12)
    assert reshape_inverse(TWO_ATOMS, 0.6) == 2.0
    assert reshape_inverse(TWO_ATOMS, 0.5) == 1.0
    assert reshape_inverse(Identity(), 0.0) == 0.0


def test_inverse_beyond_domain_is_infinite():
    assert reshape_inverse(Identity(), 5.0, upper=4) == math.inf
    assert reshape_inverse(TWO_ATOMS, 1.6) == math.inf


def test_discrete_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(((1.0, 0.5), (2.0, 0.4)))
    with pytest.raises(ValueError):
        DiscreteMeasure(((0.0, 0.5), (2.0, 0.5)))
    with pytest.raises(ValueError):
        DiscreteMeasure(((1.0, 0.5), (1.0, 0.5)))
    # unsorted input is sorted
    assert DiscreteMeasure(((2.0, 0.5), (1.0, 0.5))).atoms[0][0] == 1.0


def test_parse_and_dump_round_trip():
    for spec in (Identity(), BY(7), TWO_ATOMS):
        assert parse_reshape(dump_reshape(spec, 7), 7) == spec
    assert parse_reshape("by", 3) == BY(3)
    with pytest.raises(ValueError):
        parse_reshape("bogus", 3)


specs = st.one_of(
    st.just(Identity()),
    st.integers(1, 30).map(BY),
    st.lists(st.tuples(st.floats(0.01, 20), st.floats(0.05, 1)), min_size=1, max_size=5,
             unique_by=lambda a: a[0]).map(
        lambda atoms: DiscreteMeasure(tuple((x, m / sum(mm for _, mm in atoms)) for x, m in atoms))),
)


@given(specs, st.floats(0, 40), st.floats(0, 40))
def test_eval_is_bounded_and_monotone(spec, a, b):
    lo, hi = sorted((a, b))
    assert reshape_eval(spec, 0) == 0
    assert reshape_eval(spec, lo) <= reshape_eval(spec, hi)
    assert reshape_eval(spec, hi) <= hi * (1 + 1e-12)


@given(specs, st.floats(0, 20))
def test_inverse_is_least_preimage(spec, t):
    k = reshape_inverse(spec, t)
    if math.isinf(k):
        # no preimage inside the measure's domain
        top = spec.domain_size if isinstance(spec, BY) else spec.atoms[-1][0]
        assert reshape_eval(spec, top) < t
        return
    assert reshape_eval(spec, k) >= t
    if k > 0:
        assert reshape_eval(spec, k * (1 - 1e-9)) < t or reshape_eval(spec, k * (1 - 1e-9)) == pytest.approx(t)
