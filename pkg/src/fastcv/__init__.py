"""Exact analytical k-fold cross-validation for ridge regression and LDA."""

from .binary import (
    CvResult,
    adjust_bias,
    cv_decision_values,
    fold_factors,
    labels_to_pm1,
    permutation_test_binary,
)
from .errors import (
    ArgumentError,
    DegenerateClassError,
    DegenerateFoldError,
    FastCVError,
    NumericalDegeneracyError,
    ParseError,
    SingularFoldError,
    SingularityError,
    UndefinedMetricError,
)
from .lda_oracle import (
    fit_binary_lda,
    fit_multiclass_lda,
    naive_crossval,
    naive_permutation_test,
    scatter_matrices,
)
from .lsq_core import HatMatrix, augment, fit_ridge, hat_matrix, shrink_to_ridge
from .metrics import accuracy, auc, relative_efficiency
from .multiclass import cv_multiclass, indicator_matrix, os_step2, permutation_test_multiclass
from .synthgen import (
    Dataset,
    FoldPartition,
    PermutationPlan,
    load_csv,
    make_folds,
    make_permutation_plan,
    make_synthetic,
)

__version__ = "0.1.0"
