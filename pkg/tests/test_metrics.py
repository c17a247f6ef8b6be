import math

import pytest
from hypothesis import assume, given, strategies as st

from dagbounds.metrics import bound_coverage, bound_narrowness, is_undefined, point_coverage


class TestPointCoverage:
    def test_inside_and_outside(self):
        assert point_coverage(0.0, 1.0, 0.5) == 1
        assert point_coverage(0.0, 1.0, 1.5, 0.2, 0.2) == 0
        assert point_coverage(0.0, 1.0, -0.5, 0.2, 0.2) == 0

    def test_widened_boundary_is_closed(self):
        assert point_coverage(0.0, 1.0, 1.25, 0.0, 0.25) == 1
        assert point_coverage(0.0, 1.0, -0.5, 0.5, 0.0) == 1

    def test_reported_interval(self):
        assert point_coverage(2.4, 7.2, 4.7) == 1


class TestBoundCoverage:
    def test_superset(self):
        assert bound_coverage(0, 1, -1, 2) == 1.0

    def test_disjoint(self):
        assert bound_coverage(0, 1, 2, 3) == 0.0

    def test_half_overlap(self):
        assert bound_coverage(0, 2, 1, 3) == 0.5

    def test_degenerate_truth(self):
        assert bound_coverage(1, 1, 0, 2) == 1.0
        assert bound_coverage(1, 1, 2, 3) == 0.0

    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            bound_coverage(1, 0, 0, 1)


class TestNarrowness:
    def test_equal(self):
        assert bound_narrowness(0, 1, 0, 1) == 1.0

    def test_twice_as_wide(self):
        assert bound_narrowness(0, 1, -0.5, 1.5) == 2.0

    def test_floor_at_one(self):
        assert bound_narrowness(0, 4, 1, 2) == 1.0

    def test_disjoint_is_undefined(self):
        assert is_undefined(bound_narrowness(0, 1, 2, 3))

    def test_touching_is_undefined(self):
        assert is_undefined(bound_narrowness(0, 1, 1, 2))

    def test_point_truth_inside_wide_estimate_is_undefined(self):
        assert is_undefined(bound_narrowness(0.5, 0.5, 0, 1))

    def test_all_degenerate_and_equal(self):
        assert bound_narrowness(0.3, 0.3, 0.3, 0.3) == 1.0


intervals = st.tuples(st.floats(-10, 10), st.floats(0, 5)).map(lambda t: (t[0], t[0] + t[1]))


@given(intervals, intervals)
def test_ranges(true, est):
    c = bound_coverage(*true, *est)
    assert 0.0 <= c <= 1.0
    n = bound_narrowness(*true, *est)
    assert is_undefined(n) or n >= 1.0


@given(intervals, st.floats(0, 5), st.floats(0, 5))
def test_containment_gives_full_coverage(true, pad_lo, pad_hi):
    assert bound_coverage(*true, true[0] - pad_lo, true[1] + pad_hi) == 1.0


@given(intervals)
def test_identical_intervals(iv):
    assume(iv[1] > iv[0])
    assert bound_coverage(*iv, *iv) == 1.0
    assert bound_narrowness(*iv, *iv) == pytest.approx(1.0)
    assert not math.isnan(bound_narrowness(*iv, *iv))
