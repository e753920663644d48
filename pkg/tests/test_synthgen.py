import numpy as np
import pytest
from hypothesis import given, strategies as st

from fastcv import ArgumentError, ParseError
from fastcv.synthgen import (
    FoldPartition,
    PermutationPlan,
    derive_seed,
    load_csv,
    make_folds,
    make_permutation_plan,
    make_synthetic,
    permute_labels,
)


def test_synthetic_shape_and_balance():
    ds = make_synthetic(100, 10, 2, 7)
    assert ds.features.shape == (100, 10)
    assert ds.class_counts().tolist() == [50, 50]


def test_centroids_on_unit_sphere():
    _, centroids, cov = make_synthetic(60, 8, 4, 3, return_params=True)
    norms = np.linalg.norm(centroids, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_synthetic_is_seeded():
    a, b = make_synthetic(30, 5, 3, 11), make_synthetic(30, 5, 3, 11)
    assert a.features.tobytes() == b.features.tobytes()
    assert np.array_equal(a.labels, b.labels)
    c = make_synthetic(30, 5, 3, 12)
    assert not np.array_equal(a.features, c.features)


def test_synthetic_custom_class_sizes():
    ds = make_synthetic(40, 3, 2, 0, class_sizes=[35, 5])
    assert ds.class_counts().tolist() == [35, 5]
    with pytest.raises(ArgumentError):
        make_synthetic(40, 3, 2, 0, class_sizes=[30, 5])


def test_dataset_is_read_only():
    ds = make_synthetic(10, 2, 2, 0)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


def test_folds_equal_division():
    part = make_folds(10, 5, 1)
    assert [f.size for f in part.folds] == [2] * 5
    assert sorted(np.concatenate(part.folds).tolist()) == list(range(10))


def test_folds_remainder_spread():
    part = make_folds(7, 3, 1)
    assert sorted(f.size for f in part.folds) == [2, 2, 3]


def test_leave_one_out_folds():
    part = make_folds(6, 6, 0)
    assert all(f.size == 1 for f in part.folds)


def test_folds_need_k_at_least_two():
    with pytest.raises(ArgumentError):
        make_folds(10, 1, 0)
    with pytest.raises(ArgumentError):
        make_folds(3, 4, 0)


def test_stratified_folds_keep_every_class_in_training():
    labels = np.r_[np.ones(14, int), np.full(2, 2)]
    part = make_folds(16, 5, 3, labels)
    for tr, _ in part:
        assert set(labels[tr]) == {1, 2}


@given(n=st.integers(2, 60), data=st.data(), seed=st.integers(0, 2**32))
def test_folds_partition_range(n, data, seed):
    k = data.draw(st.integers(2, n))
    part = make_folds(n, k, seed)
    allidx = np.concatenate(part.folds)
    assert part.n_folds == k
    assert np.array_equal(np.sort(allidx), np.arange(n))
    sizes = [f.size for f in part.folds]
    assert max(sizes) - min(sizes) <= 1


def test_identity_permutation_is_first():
    plan = make_permutation_plan(8, 4, 5)
    labels = np.array([1, 2, 2, 1, 1, 2, 1, 2])
    assert np.array_equal(permute_labels(labels, plan, 0), labels)


def test_swap_permutation_applied():
    # swap positions 1 and 3 (0-based 0 and 2)
    perms = np.array([[0, 1, 2, 3], [2, 1, 0, 3]])
    plan = PermutationPlan(2, 0, perms)
    assert permute_labels(np.array([1, 1, 2, 2]), plan, 1).tolist() == [2, 1, 1, 2]


@given(seed=st.integers(0, 2**32), n=st.integers(2, 40), t=st.integers(1, 6))
def test_permutation_preserves_multiset(seed, n, t):
    plan = make_permutation_plan(n, t, seed)
    labels = np.random.default_rng(seed).integers(1, 4, n)
    for i in range(t):
        assert np.array_equal(np.sort(permute_labels(labels, plan, i)), np.sort(labels))


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, "binary", 10) == derive_seed(0, "binary", 10)
    assert derive_seed(0, "binary", 10) != derive_seed(1, "binary", 10)
    assert 0 <= derive_seed(3, 1, 2) < 2**64


def test_partition_iter_yields_complements():
    part = FoldPartition(([0, 3], [1, 2]))
    pairs = [(tr.tolist(), te.tolist()) for tr, te in part]
    assert pairs == [([1, 2], [0, 3]), ([0, 3], [1, 2])]


def test_load_csv_round_trip(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("# label,a,b\n1,0.5,1\n2,-1,3\n1,2,2\n")
    ds = load_csv(path)
    assert ds.n_classes == 2
    assert ds.labels.tolist() == [1, 2, 1]
    np.testing.assert_array_equal(ds.features[1], [-1, 3])


@pytest.mark.parametrize(
    "text, line",
    [
        ("1,0.5\n2,abc\n", 2),
        ("1,0.5,1\n2,1\n", 2),
        ("1,1\n1.5,2\n", 2),
        ("1,1\n# late header\n", 2),
    ],
)
def test_load_csv_reports_line(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError) as err:
        load_csv(path)
    assert err.value.line == line


def test_load_csv_rejects_label_gap(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text("1,0\n3,1\n")
    with pytest.raises(ArgumentError):
        load_csv(path)
