"""Jain index, accepted throughput, and completion-series reductions."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hxsim.metrics import accepted_throughput, completion_series, jain_index


class TestJainExamples:
    def test_perfect_equity(self):
        assert jain_index([5, 5, 5, 5]) == pytest.approx(1.0)

    def test_single_active_server(self):
        # one of four servers generates everything: (x)^2 / (4 x^2) = 0.25
        assert jain_index([8, 0, 0, 0]) == pytest.approx(0.25)

    def test_partial_imbalance(self):
        # (1+1+2)^2 / (3 * (1+1+4)) = 16/18
        assert jain_index([1, 1, 2]) == pytest.approx(16 / 18)

    def test_all_zero_is_none(self):
        assert jain_index([0, 0, 0]) is None


@given(
    st.lists(st.integers(min_value=0, max_value=10**6), min_size=1, max_size=64),
    st.integers(min_value=1, max_value=1000),
)
def test_jain_scale_invariance(xs, c):
    a = jain_index(xs)
    b = jain_index([c * x for x in xs])
    if a is None:
        assert b is None
    else:
        assert a == pytest.approx(b)


@given(st.lists(st.integers(min_value=0, max_value=10**6), min_size=1, max_size=64))
def test_jain_range(xs):
    j = jain_index(xs)
    if j is not None:
        n = len(xs)
        assert 1 / n - 1e-12 <= j <= 1 + 1e-12


def test_jain_rejects_bad_input():
    with pytest.raises(ValueError):
        jain_index([])
    with pytest.raises(ValueError):
        jain_index([1, -1])
    with pytest.raises(ValueError):
        jain_index(np.ones((2, 2)))


def test_accepted_throughput():
    # 64 servers consuming 32 phits/cycle in aggregate -> 0.5
    assert accepted_throughput(32 * 100, 64, 100) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        accepted_throughput(1, 64, 0)


def test_completion_series():
    series = completion_series([256, 128, 0], bucket_size=256, servers=1)
    assert series == [(0, 1.0), (256, 0.5), (512, 0.0)]
