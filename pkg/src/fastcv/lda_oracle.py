"""Reference LDA implementations and naive retrain-per-fold cross-validation.

These are the "standard approach": every fold (and every permutation)
recomputes the scatter matrices and solves a P x P system or generalized
eigenproblem from scratch. They serve as the correctness oracle for the
analytical path and as the baseline in the benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import metrics
from .binary import CvResult, fold_average, labels_to_pm1
from .errors import ArgumentError, DegenerateClassError, DegenerateFoldError
from .lsq_core import augment, fit_ridge, scatter_trace_scale, spd_factor
from .synthgen import Dataset, FoldPartition, PermutationPlan

TASKS = ("binary_regressionform", "binary_lda", "multiclass")


@dataclass(frozen=True)
class ScatterPair:
    s_w: np.ndarray
    s_b: np.ndarray
    means: np.ndarray
    counts: np.ndarray
    grand_mean: np.ndarray


@dataclass(frozen=True)
class BinaryLdaModel:
    w: np.ndarray
    b_lda: float
    m1: np.ndarray
    m2: np.ndarray
    grand_mean: np.ndarray
    b_lr: float | None = None


@dataclass(frozen=True)
class MulticlassLdaModel:
    w_mat: np.ndarray
    eigenvalues: np.ndarray
    centroids: np.ndarray


def _xy(data, labels, n_classes=None):
    if isinstance(data, Dataset):
        return data.features, data.labels, data.n_classes
    x = np.asarray(data, dtype=float)
    y = np.asarray(labels)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ArgumentError("features must be N x P with one label per row")
    return x, y, int(n_classes if n_classes is not None else y.max())


def _class_stats(x, y, n_classes):
    counts = np.bincount(y, minlength=n_classes + 1)[1:]
    if np.any(counts == 0):
        missing = [c + 1 for c in np.flatnonzero(counts == 0)]
        raise DegenerateClassError(f"classes {missing} have no samples")
    onehot = y[:, None] == np.arange(1, n_classes + 1)
    means = (onehot.T @ x) / counts[:, None]
    return counts, means


def scatter_matrices(data, labels=None, n_classes=None) -> ScatterPair:
    """Pooled within-class and between-classes scatter."""
    x, y, c = _xy(data, labels, n_classes)
    counts, means = _class_stats(x, y, c)
    grand = counts @ means / counts.sum()
    xc = x - means[y - 1]
    s_w = xc.T @ xc
    dm = (means - grand) * np.sqrt(counts)[:, None]
    s_b = dm.T @ dm
    return ScatterPair(s_w, s_b, means, counts, grand)


def between_scatter_two_class(m1, m2, n1, n2) -> np.ndarray:
    d = np.asarray(m1) - np.asarray(m2)
    return n1 * n2 / (n1 + n2) * np.outer(d, d)


def regularize(s_w: np.ndarray, lam: float, mode: str = "ridge") -> np.ndarray:
    """``S_w + lam I`` (ridge) or ``(1 - lam) S_w + lam nu I`` (shrinkage)."""
    p = s_w.shape[0]
    if mode == "ridge":
        if lam < 0:
            raise ArgumentError("ridge penalty must be >= 0")
        return s_w + lam * np.eye(p)
    if mode == "shrinkage":
        if not 0 <= lam <= 1:
            raise ArgumentError("shrinkage parameter must lie in [0, 1]")
        return (1 - lam) * s_w + lam * scatter_trace_scale(s_w) * np.eye(p)
    raise ArgumentError(f"unknown regularization mode {mode!r}")


def fit_binary_lda(data, labels=None, lam: float = 0.0, mode: str = "ridge") -> BinaryLdaModel:
    """Two-class LDA: ``w = (S_w + reg)^-1 (m1 - m2)`` with midpoint bias."""
    x, y, c = _xy(data, labels, 2)
    if c != 2 or not np.all(np.isin(y, (1, 2))):
        raise ArgumentError("binary LDA needs labels in {1, 2}")
    counts, means = _class_stats(x, y, 2)
    xc = x - means[y - 1]
    s_w = xc.T @ xc
    factor = spd_factor(regularize(s_w, lam, mode), "regularized within-class scatter")
    m1, m2 = means
    w = linalg.cho_solve(factor, m1 - m2)
    grand = counts @ means / counts.sum()
    return BinaryLdaModel(w=w, b_lda=float(-w @ (m1 + m2) / 2), m1=m1, m2=m2, grand_mean=grand)


def decision_values(model: BinaryLdaModel, features) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != model.w.size:
        raise ArgumentError(f"expected {model.w.size} features, got {x.shape[1]}")
    return x @ model.w + model.b_lda


def generalized_eigh(a, b, n_components: int, a_root=None):
    """Largest eigenpairs of ``a v = mu b v`` for symmetric ``a`` and SPD ``b``.

    ``b`` is Cholesky-factorized and the problem reduced to the standard
    symmetric one. If ``a_root`` is given, ``a = a_root @ a_root.T`` and
    ``a`` itself is ignored. Returned vectors satisfy ``V' b V = I``;
    eigenvalues are in descending order and each vector's largest-magnitude
    entry is positive.
    """
    p = b.shape[0]
    if not 1 <= n_components <= p:
        raise ArgumentError(f"cannot extract {n_components} components from a {p}-dim problem")
    u, _ = spd_factor(b, "regularized within-class scatter")
    # u'u = b, so with z = u v the problem becomes (u^-T a u^-1) z = mu z
    if a_root is not None:
        r = linalg.solve_triangular(u, a_root, trans="T")
        g = r @ r.T
    else:
        g = linalg.solve_triangular(u, a.T, trans="T")
        g = linalg.solve_triangular(u, g.T, trans="T")
    g = (g + g.T) / 2
    mu, z = linalg.eigh(g, subset_by_index=[p - n_components, p - 1])
    v = linalg.solve_triangular(u, z)
    order = np.argsort(mu)[::-1]
    mu, v = mu[order], v[:, order]
    return mu, _fix_signs(v)


def _fix_signs(v):
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1
    return v * signs


def fit_multiclass_lda(data, labels=None, lam: float = 0.0, n_classes=None) -> MulticlassLdaModel:
    """Discriminant coordinates from ``S_b W = (S_w + lam I) W Lambda``.

    Keeps the C - 1 leading eigenvectors, scaled so that
    ``W'(S_w + lam I)W = I``, and stores the projected class means.
    """
    x, y, c = _xy(data, labels, n_classes)
    if c < 2:
        raise ArgumentError("need at least two classes")
    if x.shape[1] < c - 1:
        raise ArgumentError(f"need P >= C - 1 (P={x.shape[1]}, C={c})")
    counts, means = _class_stats(x, y, c)
    grand = counts @ means / counts.sum()
    xc = x - means[y - 1]
    s_w = xc.T @ xc
    root = ((means - grand) * np.sqrt(counts)[:, None]).T
    mu, w_mat = generalized_eigh(None, regularize(s_w, lam), c - 1, a_root=root)
    return MulticlassLdaModel(w_mat=w_mat, eigenvalues=mu, centroids=means @ w_mat)


def centroid_distances(projected: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Euclidean distances between rows of ``projected`` and ``centroids``."""
    diff = projected[..., :, None, :] - centroids[..., None, :, :]
    return np.sqrt(np.einsum("...ij,...ij->...i", diff, diff))


def nearest_centroid(distances: np.ndarray):
    """Labels (1-based, ties to the smallest index) and the gap to the runner-up."""
    pred = np.argmin(distances, axis=-1) + 1
    if distances.shape[-1] > 1:
        two = np.partition(distances, 1, axis=-1)
        gap = two[..., 1] - two[..., 0]
    else:
        gap = np.full(distances.shape[:-1], np.inf)
    return pred, gap


def predict_multiclass(model: MulticlassLdaModel, features, return_margins: bool = False):
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != model.w_mat.shape[0]:
        raise ArgumentError(f"expected {model.w_mat.shape[0]} features, got {x.shape[1]}")
    pred, gap = nearest_centroid(centroid_distances(x @ model.w_mat, model.centroids))
    return (pred, gap) if return_margins else pred


def _check_train_classes(y_tr, n_classes, fold):
    present = np.zeros(n_classes + 1, dtype=bool)
    present[y_tr] = True
    if not present[1:].all():
        raise DegenerateFoldError(fold, np.flatnonzero(~present[1:]) + 1)


def _naive_cv(x, y, n_classes, partition, task, lam, metric, mode):
    if task not in TASKS:
        raise ArgumentError(f"unknown task {task!r}; choose from {TASKS}")
    if partition.n_samples != x.shape[0]:
        raise ArgumentError("partition does not match the dataset")
    binary = task != "multiclass"
    if binary and n_classes != 2:
        raise ArgumentError(f"task {task} needs exactly 2 classes")
    if not binary and metric != "accuracy":
        raise ArgumentError("multi-class cross-validation supports accuracy only")
    n = x.shape[0]
    y_pm1 = labels_to_pm1(y) if binary else None
    dvals = np.empty(n) if binary else None
    predicted = np.empty(n, dtype=np.int64)
    margins = None if binary else np.empty(n)
    perf = np.empty(partition.n_folds)
    for k, te in enumerate(partition.folds):
        tr = partition.train_indices(k)
        _check_train_classes(y[tr], n_classes, k)
        if task == "binary_regressionform":
            beta = fit_ridge(x[tr], y_pm1[tr], lam)
            dvals[te] = augment(x[te]).xa @ beta
        elif task == "binary_lda":
            model = fit_binary_lda(x[tr], y[tr], lam, mode)
            dvals[te] = decision_values(model, x[te])
        else:
            model = fit_multiclass_lda(x[tr], y[tr], lam, n_classes)
            predicted[te], margins[te] = predict_multiclass(model, x[te], return_margins=True)
            perf[k] = np.mean(predicted[te] == y[te])
            continue
        predicted[te] = metrics.predicted_class_pm1(dvals[te])
        perf[k] = metrics.score(metric, dvals[te, None], y_pm1[te, None])[0]
    return CvResult(partition=partition, metric=metric, fold_performance=perf,
                    decision_values=dvals, predicted=predicted, margins=margins)


def naive_crossval(dataset: Dataset, partition: FoldPartition, task: str, lam: float,
                   metric: str = "accuracy", mode: str = "ridge") -> CvResult:
    """Retrain on every training fold and evaluate on its test fold.

    ``binary_regressionform`` refits the ridge regression on +1/-1 codes and
    returns ``Xa_Te beta``, the exact target of the analytical path;
    ``binary_lda`` fits classical LDA; ``multiclass`` fits multi-class LDA
    and classifies by the nearest projected centroid.
    """
    return _naive_cv(dataset.features, dataset.labels, dataset.n_classes, partition,
                     task, lam, metric, mode)


def naive_permutation_test(dataset: Dataset, partition: FoldPartition, plan: PermutationPlan,
                           task: str, lam: float, metric: str = "accuracy",
                           mode: str = "ridge", weighted: bool = False) -> np.ndarray:
    """Fold-averaged performance of naive CV for every permuted labelling."""
    if plan.n_samples != dataset.n_samples:
        raise ArgumentError("permutation plan does not match the dataset")
    out = np.empty(plan.n_permutations)
    for t in range(plan.n_permutations):
        y = dataset.labels[plan.permutations[t]]
        res = _naive_cv(dataset.features, y, dataset.n_classes, partition, task, lam, metric, mode)
        out[t] = fold_average(res.fold_performance, partition, weighted)
    return out
