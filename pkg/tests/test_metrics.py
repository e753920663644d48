import numpy as np
import pytest
from hypothesis import given, strategies as st

from fastcv import ArgumentError, UndefinedMetricError
from fastcv.metrics import accuracy, auc, relative_efficiency, score


def test_accuracy_examples():
    assert accuracy(np.array([2.0, -1.0, 0.5]), np.array([1, -1, -1])) == pytest.approx(2 / 3)
    assert accuracy(np.array([1, -1, 1]), np.array([1, -1, 1])) == 1.0


def test_zero_decision_value_counts_as_positive():
    assert accuracy(np.array([0.0]), np.array([1])) == 1.0


def test_accuracy_on_class_labels():
    assert accuracy(np.array([1, 2, 3, 3]), np.array([1, 2, 2, 3])) == 0.75


def test_accuracy_length_mismatch():
    with pytest.raises(ArgumentError):
        accuracy(np.array([1.0, 2.0]), np.array([1]))


def test_auc_examples():
    assert auc([0.9, 0.1], [1, -1]) == 1.0
    assert auc([0.9, 0.1], [-1, 1]) == 0.0
    assert auc([0.3, 0.3, 0.3], [1, -1, 1]) == 0.5


def test_auc_needs_both_classes():
    with pytest.raises(UndefinedMetricError):
        auc([0.1, 0.2], [1, 1])


def brute_force_auc(d, y):
    pos, neg = d[y > 0], d[y < 0]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (pos.size * neg.size)


@given(seed=st.integers(0, 2**32), n=st.integers(2, 40))
def test_auc_matches_pair_count(seed, n):
    r = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    d = np.round(r.standard_normal(n), 1)  # rounding creates ties
    assert auc(d, y) == pytest.approx(brute_force_auc(d, y))


@given(seed=st.integers(0, 2**32), n=st.integers(2, 40), a=st.floats(0.1, 5), b=st.floats(-5, 5))
def test_auc_invariant_to_monotone_maps(seed, n, a, b):
    r = np.random.default_rng(seed)
    y = r.permutation(np.where(np.arange(n) % 2 == 0, 1, -1))
    d = r.standard_normal(n)
    for f in (lambda v: a * v + b, np.exp, lambda v: np.arctan(v) + v**3):
        assert auc(f(d), y) == pytest.approx(auc(d, y))


def test_score_is_column_wise():
    d = np.array([[1.0, -1.0], [-1.0, -1.0], [0.5, 2.0]])
    y = np.array([[1, 1], [-1, -1], [1, -1]])
    np.testing.assert_allclose(score("accuracy", d, y), [1.0, 1 / 3])
    np.testing.assert_allclose(score("auc", d, y), [1.0, 0.25])
    with pytest.raises(ArgumentError):
        score("f1", d, y)


def test_relative_efficiency():
    assert relative_efficiency(100.0, 1.0) == pytest.approx(2.0)
    assert relative_efficiency(0.37, 0.37) == 0.0
    assert relative_efficiency(1000.0, 1.0) == pytest.approx(3.0)
    with pytest.raises(ArgumentError):
        relative_efficiency(0.0, 1.0)
