import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hilbertcs.multiindex import CapacityError, IndexSet, index_rank, total_degree_set
from oracles import td_indices_bruteforce


@pytest.mark.parametrize("d,p,n", [(100, 2, 5151), (17, 4, 5985), (3, 0, 1), (8, 2, 45)])
def test_total_degree_cardinality(d, p, n):
    assert len(total_degree_set(d, p)) == n


def test_zero_order_set_is_origin():
    assert list(total_degree_set(3, 0)) == [(0, 0, 0)]


@given(st.integers(1, 4), st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_matches_bruteforce_enumeration(d, p):
    jset = total_degree_set(d, p)
    assert list(jset) == td_indices_bruteforce(d, p)
    assert len(jset) == math.comb(d + p, p)


@given(st.integers(1, 5), st.integers(0, 4))
@settings(max_examples=30, deadline=None)
def test_nested_in_degree(d, p):
    assert total_degree_set(d, p).issubset(total_degree_set(d, p + 1))


def test_rank_examples():
    j1 = total_degree_set(2, 1)
    assert index_rank(j1, (0, 0)) == 0
    assert index_rank(j1, (2, 0)) is None
    j2 = total_degree_set(2, 2)
    a, b = index_rank(j2, (0, 1)), index_rank(j2, (1, 0))
    assert b == a + 1


def test_rank_dimension_mismatch():
    with pytest.raises(ValueError):
        index_rank(total_degree_set(2, 1), (0, 0, 0))


@given(st.integers(1, 4), st.integers(0, 4))
@settings(max_examples=30, deadline=None)
def test_rank_roundtrip(d, p):
    jset = total_degree_set(d, p)
    for k in range(len(jset)):
        assert index_rank(jset, jset[k]) == k


def test_explicit_set_is_canonicalized():
    jset = IndexSet(2, [(1, 1), (0, 0), (2, 0), (0, 2)])
    assert list(jset) == [(0, 0), (0, 2), (1, 1), (2, 0)]
    assert jset.kind == "explicit-list"


@pytest.mark.parametrize("bad", [[(0, 0), (0, 0)], [(0, -1)], [(0, 0, 1)]])
def test_invalid_sets_rejected(bad):
    with pytest.raises(ValueError):
        IndexSet(2, bad)


def test_capacity_error():
    with pytest.raises(CapacityError):
        total_degree_set(10_000, 50)
    with pytest.raises(CapacityError):
        total_degree_set(8, 4, max_cardinality=100)


def test_array_is_read_only():
    arr = total_degree_set(3, 2).array
    assert arr.shape == (10, 3)
    with pytest.raises(ValueError):
        arr[0, 0] = 5


def test_text_roundtrip(tmp_path):
    jset = total_degree_set(3, 3)
    path = tmp_path / "set.txt"
    jset.save(path)
    assert path.read_text().splitlines()[1] == "0 0 1"
    assert IndexSet.load(path) == jset
    assert np.array_equal(IndexSet.from_text(jset.to_text()).array, jset.array)
