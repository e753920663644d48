"""Synthetic datasets, fold partitions and label-permutation schedules.

All generators are pure functions of their arguments. Randomness comes
from a PCG64 generator seeded with ``(seed, operation tag)`` so that, for
example, the folds drawn for seed 3 are unrelated to the data drawn for
seed 3.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import ArgumentError, ParseError

_TAG_DATA = 1
_TAG_FOLDS = 2
_TAG_PERMUTATIONS = 3


def rng_for(seed: int, tag: int) -> np.random.Generator:
    if seed < 0:
        raise ArgumentError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), tag])))


def derive_seed(master_seed: int, *coords) -> int:
    """Child seed for a grid cell: a 64-bit hash of (coords, master_seed)."""
    key = repr((tuple(coords), int(master_seed))).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer class labels in ``1..n_classes``."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise ArgumentError("features must be a 2-D matrix")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ArgumentError("labels must be a vector with one entry per row")
        if x.shape[0] < 2 or x.shape[1] < 1:
            raise ArgumentError(f"need N >= 2 and P >= 1, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ArgumentError("features contain non-finite values")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise ArgumentError("labels must be integers")
        y = y.astype(np.int64)
        present = np.unique(y)
        if present.min() < 1 or present.max() > self.n_classes:
            raise ArgumentError(f"labels must lie in 1..{self.n_classes}")
        if present.size != self.n_classes:
            missing = sorted(set(range(1, self.n_classes + 1)) - set(present.tolist()))
            raise ArgumentError(f"classes {missing} have no samples")
        object.__setattr__(self, "features", _readonly(x))
        object.__setattr__(self, "labels", _readonly(y))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]


@dataclass(frozen=True)
class FoldPartition:
    """K disjoint test-index sets (0-based) covering ``range(n_samples)``."""

    folds: tuple

    def __post_init__(self):
        folds = tuple(_readonly(np.sort(np.asarray(f, dtype=np.intp))) for f in self.folds)
        object.__setattr__(self, "folds", folds)

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    @property
    def n_samples(self) -> int:
        return int(sum(f.size for f in self.folds))

    def train_indices(self, k: int) -> np.ndarray:
        mask = np.ones(self.n_samples, dtype=bool)
        mask[self.folds[k]] = False
        return np.flatnonzero(mask)

    def __iter__(self):
        """Yield ``(train, test)`` index pairs."""
        for k, te in enumerate(self.folds):
            yield self.train_indices(k), te


@dataclass(frozen=True)
class PermutationPlan:
    """Seeded label-shuffle schedule; row 0 is always the identity."""

    n_permutations: int
    seed: int
    permutations: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.permutations, dtype=np.intp)
        if p.ndim != 2 or p.shape[0] != self.n_permutations:
            raise ArgumentError("permutations must be an (n_permutations, N) array")
        object.__setattr__(self, "permutations", _readonly(p))

    @property
    def n_samples(self) -> int:
        return self.permutations.shape[1]


def make_synthetic(
    n_samples: int,
    n_features: int,
    n_classes: int,
    seed: int,
    class_sizes: Sequence[int] | None = None,
    return_params: bool = False,
):
    """Gaussian classes with centroids on the unit sphere and a shared covariance.

    The covariance is one Wishart draw with ``P + 1`` degrees of freedom and
    scale ``I / (P + 1)`` (expected value: the identity). Classes are balanced
    unless ``class_sizes`` is given.

    Parameters
    ----------
    n_samples, n_features, n_classes : int
        N, P and C.
    seed : int
        Non-negative seed.
    class_sizes : sequence of int, optional
        Explicit per-class sample counts summing to ``n_samples``.
    return_params : bool
        Also return ``(centroids, covariance)``.
    """
    if n_features < 1 or n_classes < 2 or n_samples < 2:
        raise ArgumentError("need n_features >= 1, n_classes >= 2 and n_samples >= 2")
    if n_samples < n_classes:
        raise ArgumentError(f"n_samples={n_samples} < n_classes={n_classes}")
    if class_sizes is None:
        base, extra = divmod(n_samples, n_classes)
        sizes = np.full(n_classes, base)
        sizes[:extra] += 1
    else:
        sizes = np.asarray(class_sizes, dtype=int)
        if sizes.shape != (n_classes,) or sizes.sum() != n_samples or sizes.min() < 1:
            raise ArgumentError("class_sizes must be n_classes positive counts summing to n_samples")

    rng = rng_for(seed, _TAG_DATA)
    centroids = rng.standard_normal((n_classes, n_features))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    df = n_features + 1
    cov = stats.wishart(df=df, scale=np.eye(n_features) / df).rvs(random_state=rng)
    cov = np.atleast_2d(cov)
    chol = np.linalg.cholesky(cov)

    labels = np.repeat(np.arange(1, n_classes + 1), sizes)
    noise = rng.standard_normal((n_samples, n_features)) @ chol.T
    features = centroids[labels - 1] + noise
    order = rng.permutation(n_samples)
    ds = Dataset(features[order], labels[order], n_classes)
    if return_params:
        return ds, centroids, cov
    return ds


def make_folds(
    n_samples: int,
    n_folds: int,
    seed: int,
    stratify_labels: Sequence[int] | None = None,
) -> FoldPartition:
    """Random K-fold partition.

    Samples are shuffled, optionally grouped by class, and dealt round-robin
    to the folds, so the first ``N mod K`` folds get one extra sample and each
    class is spread over the folds as evenly as possible.
    """
    if n_samples < 2:
        raise ArgumentError("need at least 2 samples")
    if not 2 <= n_folds <= n_samples:
        raise ArgumentError(f"n_folds must lie in [2, {n_samples}], got {n_folds}")
    rng = rng_for(seed, _TAG_FOLDS)
    order = rng.permutation(n_samples)
    if stratify_labels is not None:
        y = np.asarray(stratify_labels)
        if y.shape != (n_samples,):
            raise ArgumentError("stratify_labels must have length n_samples")
        order = order[np.argsort(y[order], kind="stable")]
    slot = np.empty(n_samples, dtype=np.intp)
    slot[order] = np.arange(n_samples) % n_folds
    return FoldPartition(tuple(np.flatnonzero(slot == k) for k in range(n_folds)))


def make_permutation_plan(n_samples: int, n_permutations: int, seed: int) -> PermutationPlan:
    """``n_permutations`` shuffles of ``range(n_samples)``, the first being the identity."""
    if n_permutations < 1:
        raise ArgumentError("n_permutations must be >= 1")
    rng = rng_for(seed, _TAG_PERMUTATIONS)
    perms = np.empty((n_permutations, n_samples), dtype=np.intp)
    perms[0] = np.arange(n_samples)
    for t in range(1, n_permutations):
        perms[t] = rng.permutation(n_samples)
    return PermutationPlan(n_permutations, int(seed), perms)


def permute_labels(labels, plan: PermutationPlan, t: int) -> np.ndarray:
    labels = np.asarray(labels)
    if not 0 <= t < plan.n_permutations:
        raise ArgumentError(f"permutation index {t} out of range [0, {plan.n_permutations})")
    if labels.shape[0] != plan.n_samples:
        raise ArgumentError("labels length does not match the permutation plan")
    return labels[plan.permutations[t]]


def load_csv(path) -> Dataset:
    """Read ``label,feature1,feature2,...`` rows; a leading ``#`` row is a header."""
    path = Path(path)
    labels, rows = [], []
    width = None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if row[0].lstrip().startswith("#"):
                if lineno == 1:
                    continue
                raise ParseError("header row is only allowed on the first line", lineno)
            if len(row) < 2:
                raise ParseError("expected a label and at least one feature", lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}", lineno)
            try:
                label = float(row[0])
                values = [float(c) for c in row[1:]]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if label != int(label):
                raise ParseError(f"class label {row[0]!r} is not an integer", lineno)
            if not np.all(np.isfinite(values)):
                raise ParseError("non-finite feature value", lineno)
            labels.append(int(label))
            rows.append(values)
    if not rows:
        raise ParseError(f"{path} contains no data rows")
    y = np.asarray(labels)
    return Dataset(np.asarray(rows), y, int(y.max()))
