"""Analytical k-fold cross-validation for binary LDA and least-squares regression.

One full-data fit gives the hat matrix ``H``. For a test set ``Te`` the
cross-validated errors follow from the full-data residuals alone::

    e_dot[Te] = (I - H[Te, Te])^-1 e_hat[Te]
    y_dot[Te] = y[Te] - e_dot[Te]

and the fits of the held-out model on its own training rows are::

    e_dot[Tr] = e_hat[Tr] + H[Tr, Te] e_dot[Te]

``H`` depends on the features only, so a permutation test reuses it and
the per-fold factorizations of ``I - H[Te, Te]`` for every label shuffle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import metrics
from .errors import ArgumentError, DegenerateFoldError, SingularFoldError, SingularityError
from .lsq_core import HatMatrix, spd_factor
from .synthgen import FoldPartition, PermutationPlan

# permutations are processed in fixed-size blocks so results never depend
# on how many are requested at once
PERMUTATION_BLOCK = 256


@dataclass(frozen=True)
class CvResult:
    """Cross-validated outputs assembled over all folds.

    ``decision_values`` holds the raw cross-validated decision values
    (binary) in sample order; ``adjusted_values`` the bias-adjusted ones
    when :func:`adjust_bias` was applied. Multi-class results instead
    carry ``predicted`` labels, per-sample ``margins`` (gap between the two
    smallest centroid distances) and per-fold ``fold_scores``.
    """

    partition: FoldPartition
    metric: str | None
    fold_performance: np.ndarray | None
    decision_values: np.ndarray | None = None
    adjusted_values: np.ndarray | None = None
    fitted: np.ndarray | None = None
    predicted: np.ndarray | None = None
    margins: np.ndarray | None = None
    fold_scores: tuple | None = None

    @property
    def values(self) -> np.ndarray | None:
        """Adjusted decision values if available, else the raw ones."""
        return self.adjusted_values if self.adjusted_values is not None else self.decision_values

    @property
    def mean_performance(self) -> float:
        return self.mean()

    def mean(self, weighted: bool = False) -> float:
        if self.fold_performance is None:
            raise ArgumentError("no performance metric was computed")
        return float(fold_average(self.fold_performance, self.partition, weighted))


def labels_to_pm1(labels) -> np.ndarray:
    """Map class labels {1, 2} to the regression codes {+1, -1}."""
    y = np.asarray(labels)
    if not np.all(np.isin(y, (1, 2))):
        raise ArgumentError("binary labels must be 1 or 2")
    return np.where(y == 1, 1.0, -1.0)


def _check_pm1(y):
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ArgumentError("classification responses must be coded +1/-1")


def _check_partition(hat: HatMatrix, partition: FoldPartition):
    if partition.n_samples != hat.n:
        raise ArgumentError(
            f"partition covers {partition.n_samples} samples but H is {hat.n} x {hat.n}"
        )


def fold_factors(hat: HatMatrix, partition: FoldPartition) -> list:
    """Cholesky factors of ``I - H[Te, Te]`` for every fold.

    ``I - H[Te, Te]`` is positive definite whenever the training set is
    non-empty and the regularized scatter is nonsingular.
    """
    _check_partition(hat, partition)
    factors = []
    for k, te in enumerate(partition.folds):
        m = -hat.h[np.ix_(te, te)]
        m[np.diag_indices_from(m)] += 1.0
        try:
            factors.append(spd_factor(m, f"I - H_Te (fold {k})"))
        except SingularityError as exc:
            raise SingularFoldError(k, exc.rcond) from None
    return factors


def cv_fits(hat: HatMatrix, response, partition: FoldPartition, factors=None,
            train: bool = False):
    """Per-fold cross-validated fits for an N x T response block.

    Returns ``(fitted, blocks)`` where ``fitted = H y`` and ``blocks[k]`` is
    ``(y_dot_te, y_dot_tr)`` (``y_dot_tr`` is ``None`` unless ``train``).
    """
    y = np.asarray(response, dtype=float)
    if factors is None:
        factors = fold_factors(hat, partition)
    fitted = hat.h @ y
    e_hat = y - fitted
    blocks = []
    for k, te in enumerate(partition.folds):
        e_dot_te = linalg.cho_solve(factors[k], e_hat[te])
        y_dot_tr = None
        if train:
            tr = partition.train_indices(k)
            y_dot_tr = y[tr] - (e_hat[tr] + hat.h[np.ix_(tr, te)] @ e_dot_te)
        blocks.append((y[te] - e_dot_te, y_dot_tr))
    return fitted, blocks


def _midpoint_shift(y_dot_tr, y_tr, fold):
    """Per-column shift replacing the regression bias by the LDA midpoint bias.

    Class-wise means of the training fits are the projected class means
    plus the regression bias, so subtracting their midpoint yields
    ``w'x - w'(m1 + m2)/2``.
    """
    pos = y_tr > 0
    n_pos = pos.sum(axis=0)
    n_neg = pos.shape[0] - n_pos
    if np.any(n_pos == 0) or np.any(n_neg == 0):
        missing = [1] if np.any(n_pos == 0) else [2]
        raise DegenerateFoldError(fold, missing)
    mean_pos = (y_dot_tr * pos).sum(axis=0) / n_pos
    mean_neg = (y_dot_tr * ~pos).sum(axis=0) / n_neg
    return -(mean_pos + mean_neg) / 2


def cv_decision_values(hat: HatMatrix, labels_pm1, partition: FoldPartition,
                       metric: str | None = "accuracy") -> CvResult:
    """Cross-validated decision values without refitting any fold model.

    With ``metric=None`` the response may be continuous (ridge regression)
    and no performance is computed.
    """
    y = np.asarray(labels_pm1, dtype=float)
    if y.shape != (hat.n,):
        raise ArgumentError("response length does not match H")
    if metric is not None:
        _check_pm1(y)
    fitted, blocks = cv_fits(hat, y, partition)
    y_dot = np.empty_like(y)
    perf = [] if metric is not None else None
    for te, (y_dot_te, _) in zip(partition.folds, blocks):
        y_dot[te] = y_dot_te
        if metric is not None:
            perf.append(metrics.score(metric, y_dot_te[:, None], y[te, None])[0])
    return CvResult(
        partition=partition,
        metric=metric,
        fold_performance=None if perf is None else np.asarray(perf),
        decision_values=y_dot,
        fitted=fitted,
        predicted=metrics.predicted_class_pm1(y_dot) if metric is not None else None,
    )


def adjust_bias(hat: HatMatrix, labels_pm1, partition: FoldPartition, raw: CvResult) -> CvResult:
    """Shift each fold's test decision values from the regression bias to the LDA bias."""
    y = np.asarray(labels_pm1, dtype=float)
    _check_pm1(y)
    if raw.decision_values is None or raw.decision_values.shape != y.shape:
        raise ArgumentError("raw result does not match the labels")
    e_hat = y - (raw.fitted if raw.fitted is not None else hat.h @ y)
    adjusted = np.empty_like(y)
    perf = []
    for k, te in enumerate(partition.folds):
        tr = partition.train_indices(k)
        e_dot_te = y[te] - raw.decision_values[te]
        y_dot_tr = y[tr] - (e_hat[tr] + hat.h[np.ix_(tr, te)] @ e_dot_te)
        shift = _midpoint_shift(y_dot_tr[:, None], y[tr, None], k)[0]
        adjusted[te] = raw.decision_values[te] + shift
        if raw.metric is not None:
            perf.append(metrics.score(raw.metric, adjusted[te, None], y[te, None])[0])
    return CvResult(
        partition=partition,
        metric=raw.metric,
        fold_performance=np.asarray(perf) if raw.metric is not None else None,
        decision_values=raw.decision_values,
        adjusted_values=adjusted,
        fitted=raw.fitted,
        predicted=metrics.predicted_class_pm1(adjusted),
    )


def permutation_test_binary(hat: HatMatrix, labels_pm1, partition: FoldPartition,
                            plan: PermutationPlan, metric: str = "accuracy",
                            adjust: bool = False, weighted: bool = False) -> np.ndarray:
    """Fold-averaged performance for every permutation in ``plan``.

    Entry 0 is the unpermuted result. ``H`` and the fold factorizations are
    computed once and shared by all permutations.
    """
    y = np.asarray(labels_pm1, dtype=float)
    _check_pm1(y)
    if plan.n_samples != y.size or y.size != hat.n:
        raise ArgumentError("labels, H and permutation plan disagree on N")
    factors = fold_factors(hat, partition)
    out = np.empty(plan.n_permutations)
    for start in range(0, plan.n_permutations, PERMUTATION_BLOCK):
        perms = plan.permutations[start:start + PERMUTATION_BLOCK]
        y_perm = y[perms.T]
        _, blocks = cv_fits(hat, y_perm, partition, factors, train=adjust)
        perf = np.empty((partition.n_folds, perms.shape[0]))
        for k, te in enumerate(partition.folds):
            y_dot_te, y_dot_tr = blocks[k]
            if adjust:
                tr = partition.train_indices(k)
                y_dot_te = y_dot_te + _midpoint_shift(y_dot_tr, y_perm[tr], k)
            perf[k] = metrics.score(metric, y_dot_te, y_perm[te])
        out[start:start + perms.shape[0]] = fold_average(perf, partition, weighted)
    return out


def fold_average(perf: np.ndarray, partition: FoldPartition, weighted: bool = False):
    """Average a (K, ...) array of per-fold values over folds."""
    if not weighted:
        return perf.mean(axis=0)
    sizes = np.array([f.size for f in partition.folds], dtype=float)
    return np.tensordot(sizes / sizes.sum(), perf, axes=1)
