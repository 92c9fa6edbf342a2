import math

import numpy as np
import pytest

from hilbertcs.expansion import ExpansionModel, truncation_error
from hilbertcs.hilbert import HilbertVector, InnerProduct
from hilbertcs.multiindex import IndexSet, total_degree_set


def model(seed=0, d=2, p=3, k=4):
    jset = total_degree_set(d, p)
    data = np.random.default_rng(seed).standard_normal((len(jset), k))
    return ExpansionModel(jset, HilbertVector(data))


def test_moments_match_sampling():
    m = model()
    y = np.random.default_rng(1).uniform(-1, 1, size=(400_000, 2))
    vals = m.evaluate(y)
    assert np.allclose(vals.mean(axis=0), m.mean(), atol=0.03)
    assert np.allclose(vals.var(axis=0), m.variance(), rtol=0.03)


def test_mean_without_zero_index():
    m = ExpansionModel(IndexSet(1, [(1,), (2,)]), HilbertVector(np.ones((2, 3))))
    assert not np.any(m.mean())
    assert np.allclose(m.variance(), 2.0)


def test_best_s_term_and_truncation():
    m = model(2)
    norms = m.coefficients.row_norms()
    s = 4
    best = m.best_s_term(s)
    kept = m.top_rows(s)
    assert sorted(np.argsort(-norms)[:s]) == kept
    assert m.l2_distance(best) == pytest.approx(truncation_error(m.coefficients, kept), rel=1e-14)
    errs = [truncation_error(m.coefficients, m.top_rows(t)) for t in range(len(norms) + 1)]
    assert all(b <= a for a, b in zip(errs, errs[1:])) and errs[-1] == 0.0


def test_l2_distance_across_index_sets():
    small = model(3, p=1)
    big_data = np.zeros((len(total_degree_set(2, 3)), 4))
    big_data[:3] = small.coefficients.data
    big_data[5] = 1.0
    big = ExpansionModel(total_degree_set(2, 3), HilbertVector(big_data))
    assert small.l2_distance(big) == pytest.approx(2.0, rel=1e-14)
    assert big.l2_distance(small) == pytest.approx(2.0, rel=1e-14)


def test_gram_norms():
    gram = np.diag([4.0, 1.0])
    m = ExpansionModel(IndexSet(1, [(0,), (1,)]),
                       HilbertVector([[0.0, 0.0], [1.0, 0.0]], InnerProduct(2, gram)))
    assert truncation_error(m.coefficients, [0]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ExpansionModel(IndexSet(1, [(0,)]), HilbertVector(np.ones((2, 2))))
