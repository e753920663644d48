"""Analytical cross-validation for multi-class LDA via optimal scoring.

Step 1 regresses the class indicator matrix on the augmented design; its
cross-validated fits come from the same update rule as the binary case,
applied column-wise. Step 2 solves a small C x C eigenproblem per fold::

    (Y_dot_Tr' Y_Tr / N_Tr) theta = alpha^2 (Y_Tr' Y_Tr / N_Tr) theta

with the scores normalized so that ``theta' (Y_Tr' Y_Tr / N_Tr) theta = 1``.
The right-hand matrix is the diagonal of training class proportions.
Dropping the trivial pair (constant scores, ``alpha^2 = 1``) and scaling
by ``D = diag(1 / sqrt(N_Tr alpha^2 (1 - alpha^2)))`` gives discriminant
scores that differ from classical LDA projections only by a constant
shift. That shift cancels in centroid distances.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .binary import PERMUTATION_BLOCK, CvResult, cv_fits, fold_average, fold_factors
from .errors import (
    ArgumentError,
    DegenerateClassError,
    DegenerateFoldError,
    NumericalDegeneracyError,
)
from .lda_oracle import centroid_distances, nearest_centroid
from .lsq_core import HatMatrix
from .synthgen import FoldPartition, PermutationPlan

ALPHA_TOL = 1e-8
# eigenvalues this close to 0 or 1 are rounding noise around a perfect or null fit
ALPHA_SNAP = 1e-12
TRIVIAL_CV_TOL = 1e-8
# relative asymmetry tolerated in Y_dot' Y (symmetric in exact arithmetic)
SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class OptimalScoring:
    theta: np.ndarray
    alpha_sq: np.ndarray
    d_scale: np.ndarray


@dataclass(frozen=True)
class DiscriminantScores:
    scores: np.ndarray
    centroids: np.ndarray


def indicator_matrix(labels, n_classes: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ArgumentError("labels must be a vector")
    if y.size and (y.min() < 1 or y.max() > n_classes):
        raise ArgumentError(f"labels must lie in 1..{n_classes}")
    return (y[:, None] == np.arange(1, n_classes + 1)).astype(float)


def _os_step2_batch(y_dot_tr: np.ndarray, y_tr: np.ndarray):
    """Optimal scores for a (N_Tr, T, C) stack of fits and indicator rows.

    Returns ``theta`` (T, C, C-1), ``alpha_sq`` (T, C-1) and the diagonal of
    ``D`` (T, C-1). Components with ``alpha^2`` exactly 0 or 1 get a zero
    scale, which removes them from every centroid distance.
    """
    n_tr, _, c = y_tr.shape
    counts = y_tr.sum(axis=0)
    if np.any(counts == 0):
        raise DegenerateClassError("a class is absent from the training rows")
    if n_tr <= c:
        raise ArgumentError(f"optimal scoring needs N_Tr > C (N_Tr={n_tr}, C={c})")
    a = np.einsum("itc,itd->tcd", y_dot_tr, y_tr) / n_tr
    asym = np.abs(a - a.transpose(0, 2, 1)).max()
    if asym > SYMMETRY_TOL * max(np.abs(a).max(), 1e-300):
        raise NumericalDegeneracyError(f"optimal-scoring matrix is not symmetric (deviation {asym:.2e})")
    a = (a + a.transpose(0, 2, 1)) / 2
    root_pi = np.sqrt(counts / n_tr)
    m = a / root_pi[:, :, None] / root_pi[:, None, :]
    evals, evecs = np.linalg.eigh(m)
    theta = evecs / root_pi[:, :, None]

    mean = theta.mean(axis=1)
    spread = theta.std(axis=1) / np.maximum(np.abs(mean), 1e-300)
    trivial = np.argmin(spread, axis=1)
    fallback = spread[np.arange(len(trivial)), trivial] >= TRIVIAL_CV_TOL
    if np.any(fallback):
        trivial[fallback] = np.argmin(np.abs(evals[fallback] - 1.0), axis=1)

    keep = np.ones(evals.shape, dtype=bool)
    keep[np.arange(len(trivial)), trivial] = False
    # eigh sorts ascending; keep the rest in descending order
    alpha_sq = evals[keep].reshape(-1, c - 1)[:, ::-1]
    theta = theta.transpose(0, 2, 1)[keep].reshape(-1, c - 1, c)[:, ::-1].transpose(0, 2, 1)

    if np.any(alpha_sq < -ALPHA_TOL) or np.any(alpha_sq > 1 + ALPHA_TOL):
        raise NumericalDegeneracyError(
            f"optimal-scoring eigenvalues outside [0, 1]: {alpha_sq.min():.3e}..{alpha_sq.max():.3e}"
        )
    alpha_sq = np.clip(alpha_sq, 0.0, 1.0)
    alpha_sq[alpha_sq < ALPHA_SNAP] = 0.0
    alpha_sq[alpha_sq > 1 - ALPHA_SNAP] = 1.0
    spread_term = alpha_sq * (1 - alpha_sq)
    degenerate = spread_term == 0
    if np.any(degenerate):
        warnings.warn(
            f"dropping {int(degenerate.sum())} optimal-scoring component(s) with alpha^2 in {{0, 1}}",
            RuntimeWarning,
            stacklevel=3,
        )
    d = np.zeros_like(alpha_sq)
    d[~degenerate] = 1.0 / np.sqrt(n_tr * spread_term[~degenerate])

    idx = np.argmax(np.abs(theta), axis=1)
    signs = np.sign(np.take_along_axis(theta, idx[:, None, :], axis=1))
    signs[signs == 0] = 1
    return theta * signs, alpha_sq, d


def os_step1_cv(hat: HatMatrix, y_mat, partition: FoldPartition) -> list:
    """Cross-validated indicator fits ``(Y_dot_Tr, Y_dot_Te)`` for every fold."""
    y = np.asarray(y_mat, dtype=float)
    if y.ndim != 2 or y.shape[0] != hat.n:
        raise ArgumentError("indicator matrix must be N x C")
    _, blocks = cv_fits(hat, y, partition, train=True)
    return [(tr, te) for te, tr in blocks]


def os_step2(y_dot_tr, y_tr) -> OptimalScoring:
    """Optimal scores, eigenvalues and scaling matrix for one training fold."""
    y_dot_tr = np.asarray(y_dot_tr, dtype=float)
    y_tr = np.asarray(y_tr, dtype=float)
    if y_dot_tr.shape != y_tr.shape or y_tr.ndim != 2:
        raise ArgumentError("fits and indicator rows must both be N_Tr x C")
    theta, alpha_sq, d = _os_step2_batch(y_dot_tr[:, None, :], y_tr[:, None, :])
    return OptimalScoring(theta[0], alpha_sq[0], np.diag(d[0]))


def discriminant_scores(y_dot, theta, d_scale, y_dot_tr, labels_tr) -> DiscriminantScores:
    """Project fits onto the discriminant space and attach training centroids."""
    y_dot = np.atleast_2d(np.asarray(y_dot, dtype=float))
    y_dot_tr = np.atleast_2d(np.asarray(y_dot_tr, dtype=float))
    theta = np.asarray(theta, dtype=float)
    d_scale = np.atleast_2d(np.asarray(d_scale, dtype=float))
    c = theta.shape[0]
    if y_dot.shape[1] != c or y_dot_tr.shape[1] != c or d_scale.shape != (theta.shape[1],) * 2:
        raise ArgumentError("fits, scores and scaling have inconsistent shapes")
    proj = theta @ d_scale
    tr_scores = y_dot_tr @ proj
    onehot = indicator_matrix(labels_tr, c)
    counts = onehot.sum(axis=0)
    if np.any(counts == 0):
        raise DegenerateClassError("a class is absent from the training rows")
    return DiscriminantScores(y_dot @ proj, (onehot.T @ tr_scores) / counts[:, None])


def classify_nearest_centroid(scores: DiscriminantScores, return_margins: bool = False):
    if scores.scores.shape[1] != scores.centroids.shape[1]:
        raise ArgumentError("scores and centroids live in different spaces")
    pred, gap = nearest_centroid(centroid_distances(scores.scores, scores.centroids))
    return (pred, gap) if return_margins else pred


def _infer_classes(labels, n_classes):
    y = np.asarray(labels)
    c = int(n_classes if n_classes is not None else y.max())
    if c < 2:
        raise ArgumentError("need at least two classes")
    return y, c


def cv_multiclass(hat: HatMatrix, labels, partition: FoldPartition, n_classes=None) -> CvResult:
    """Cross-validated multi-class LDA predictions without refitting."""
    y, c = _infer_classes(labels, n_classes)
    y_mat = indicator_matrix(y, c)
    fits = os_step1_cv(hat, y_mat, partition)
    n = y.size
    predicted = np.empty(n, dtype=np.int64)
    margins = np.empty(n)
    perf = np.empty(partition.n_folds)
    fold_scores = []
    for k, (te, (y_dot_tr, y_dot_te)) in enumerate(zip(partition.folds, fits)):
        tr = partition.train_indices(k)
        _require_classes(y[tr], c, k)
        os = os_step2(y_dot_tr, y_mat[tr])
        sc = discriminant_scores(y_dot_te, os.theta, os.d_scale, y_dot_tr, y[tr])
        predicted[te], margins[te] = classify_nearest_centroid(sc, return_margins=True)
        perf[k] = np.mean(predicted[te] == y[te])
        fold_scores.append(sc)
    return CvResult(partition=partition, metric="accuracy", fold_performance=perf,
                    predicted=predicted, margins=margins, fold_scores=tuple(fold_scores))


def _require_classes(y_tr, c, fold):
    counts = np.bincount(y_tr, minlength=c + 1)[1:]
    if np.any(counts == 0):
        raise DegenerateFoldError(fold, np.flatnonzero(counts == 0) + 1)


def permutation_test_multiclass(hat: HatMatrix, labels, partition: FoldPartition,
                                plan: PermutationPlan, n_classes=None,
                                weighted: bool = False) -> np.ndarray:
    """Fold-averaged cross-validated accuracy for every permutation in ``plan``."""
    y, c = _infer_classes(labels, n_classes)
    if plan.n_samples != y.size or y.size != hat.n:
        raise ArgumentError("labels, H and permutation plan disagree on N")
    factors = fold_factors(hat, partition)
    out = np.empty(plan.n_permutations)
    eye = np.eye(c)
    for start in range(0, plan.n_permutations, PERMUTATION_BLOCK):
        perms = plan.permutations[start:start + PERMUTATION_BLOCK]
        t = perms.shape[0]
        y_perm = y[perms.T]                       # (N, T)
        y_mat = eye[y_perm - 1]                   # (N, T, C)
        _, blocks = cv_fits(hat, y_mat.reshape(y.size, t * c), partition, factors, train=True)
        perf = np.empty((partition.n_folds, t))
        for k, te in enumerate(partition.folds):
            tr = partition.train_indices(k)
            y_dot_te, y_dot_tr = (b.reshape(-1, t, c) for b in blocks[k])
            counts = y_mat[tr].sum(axis=0)
            if np.any(counts == 0):
                bad = np.flatnonzero(np.any(counts == 0, axis=0)) + 1
                raise DegenerateFoldError(k, bad)
            theta, _, d = _os_step2_batch(y_dot_tr, y_mat[tr])
            proj = theta * d[:, None, :]           # (T, C, C-1)
            tr_scores = np.einsum("itc,tcj->tij", y_dot_tr, proj)
            centroids = np.einsum("itc,tij->tcj", y_mat[tr], tr_scores) / counts[:, :, None]
            te_scores = np.einsum("itc,tcj->tij", y_dot_te, proj)
            pred, _ = nearest_centroid(centroid_distances(te_scores, centroids))
            perf[k] = np.mean(pred == y_perm[te].T, axis=1)
        out[start:start + t] = fold_average(perf, partition, weighted)
    return out
