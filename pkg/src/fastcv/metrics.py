"""Classifier performance metrics and the benchmark's relative efficiency."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata

from .errors import ArgumentError, UndefinedMetricError

METRICS = ("accuracy", "auc")


def predicted_class_pm1(decision_values) -> np.ndarray:
    """+1 where the decision value is >= 0, -1 otherwise."""
    return np.where(np.asarray(decision_values) >= 0, 1, -1)


def accuracy(predicted, true_labels) -> float:
    """Fraction of correct predictions.

    Floating-point ``predicted`` values are treated as binary decision
    values against +1/-1 truth and thresholded at zero; integer values
    are compared to ``true_labels`` directly.
    """
    pred = np.asarray(predicted)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise ArgumentError(f"length mismatch: {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise ArgumentError("accuracy of an empty prediction set is undefined")
    if np.issubdtype(pred.dtype, np.floating):
        pred = predicted_class_pm1(pred)
    return float(np.mean(pred == true))


def auc(decision_values, true_labels_pm1) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic; ties count 1/2."""
    d = np.asarray(decision_values, dtype=float)
    y = np.asarray(true_labels_pm1)
    if d.shape != y.shape or d.ndim != 1:
        raise ArgumentError(f"length mismatch: {d.shape} vs {y.shape}")
    return float(batch_auc(d[:, None], y[:, None])[0])


def batch_auc(decision_values: np.ndarray, true_labels_pm1: np.ndarray) -> np.ndarray:
    """Column-wise AUC for M x T arrays of decision values and +1/-1 labels."""
    pos = true_labels_pm1 > 0
    n_pos = pos.sum(axis=0)
    n_neg = pos.shape[0] - n_pos
    if np.any(n_pos == 0) or np.any(n_neg == 0):
        raise UndefinedMetricError("AUC needs both classes present in every evaluated set")
    ranks = rankdata(decision_values, axis=0)
    u = (ranks * pos).sum(axis=0) - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def batch_accuracy_pm1(decision_values: np.ndarray, true_labels_pm1: np.ndarray) -> np.ndarray:
    return np.mean(predicted_class_pm1(decision_values) == true_labels_pm1, axis=0)


def score(metric: str, decision_values, true_labels_pm1) -> np.ndarray:
    """Evaluate ``metric`` column-wise on binary decision values."""
    if metric == "accuracy":
        return batch_accuracy_pm1(decision_values, true_labels_pm1)
    if metric == "auc":
        return batch_auc(decision_values, true_labels_pm1)
    raise ArgumentError(f"unknown metric {metric!r}; choose from {METRICS}")


def relative_efficiency(time_standard: float, time_analytic: float) -> float:
    """log10 of the speed-up; 1.0 means the analytic run was 10x faster."""
    if not (time_standard > 0 and time_analytic > 0):
        raise ArgumentError("timings must be positive")
    return math.log10(time_standard / time_analytic)
