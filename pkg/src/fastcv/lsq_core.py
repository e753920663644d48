"""Least-squares machinery shared by the oracle and the analytical path.

The design is always augmented with a trailing column of ones, and the
ridge penalty never touches that column (``I0`` mask), so the fitted
intercept is the one an unpenalized model would give for centered data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .errors import ArgumentError, SingularityError

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class AugmentedDesign:
    xa: np.ndarray

    def __post_init__(self):
        if self.xa.ndim != 2 or self.xa.shape[1] < 1 or not np.all(self.xa[:, -1] == 1.0):
            raise ArgumentError("augmented design must end in a column of ones")

    @property
    def n(self) -> int:
        return self.xa.shape[0]

    @property
    def p(self) -> int:
        return self.xa.shape[1] - 1


@dataclass(frozen=True)
class RidgeSpec:
    lam: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ArgumentError(f"ridge penalty must be finite and >= 0, got {self.lam}")

    def penalty_mask(self, p: int) -> np.ndarray:
        """Diagonal of ``I0`` for a (p + 1)-column design."""
        mask = np.ones(p + 1)
        mask[-1] = 0.0
        return mask


def spd_factor(a: np.ndarray, what: str = "matrix"):
    """Cholesky factor of a symmetric positive definite matrix.

    Returns ``(c, lower)`` as accepted by :func:`scipy.linalg.cho_solve`.
    Raises :class:`SingularityError` if the factorization breaks down or
    the reciprocal condition estimate falls below ``RCOND_MIN``.
    """
    a = np.asarray(a, dtype=float)
    anorm = np.linalg.norm(a, 1)
    c, info = lapack.dpotrf(a, lower=False, clean=True)
    if info != 0:
        raise SingularityError(f"{what} is not positive definite (leading minor {info})", 0.0)
    rcond, info = lapack.dpocon(c, anorm)
    if info != 0 or not rcond > RCOND_MIN:
        raise SingularityError(
            f"{what} is numerically singular: reciprocal condition estimate {rcond:.3e} "
            f"<= {RCOND_MIN:.0e}",
            float(rcond),
        )
    return c, False


@dataclass(frozen=True)
class HatMatrix:
    """Regularized hat matrix ``H = Xa S Xa'`` with ``S = (Xa'Xa + lam I0)^-1``.

    ``s`` is formed from the stored Cholesky factor the first time it is
    requested; fold updates only ever need ``h``.
    """

    h: np.ndarray
    design: AugmentedDesign
    ridge: RidgeSpec
    factor: tuple = field(repr=False)

    @cached_property
    def s(self) -> np.ndarray:
        s = linalg.cho_solve(self.factor, np.eye(self.design.p + 1))
        return (s + s.T) / 2

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def fitted(self, response) -> np.ndarray:
        return self.h @ response


def augment(features) -> AugmentedDesign:
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ArgumentError("features must be a non-empty N x P matrix")
    if not np.all(np.isfinite(x)):
        raise ArgumentError("features contain non-finite values")
    xa = np.empty((x.shape[0], x.shape[1] + 1))
    xa[:, :-1] = x
    xa[:, -1] = 1.0
    xa.setflags(write=False)
    return AugmentedDesign(xa)


def _as_design(design) -> AugmentedDesign:
    return design if isinstance(design, AugmentedDesign) else augment(design)


def _as_ridge(ridge) -> RidgeSpec:
    return ridge if isinstance(ridge, RidgeSpec) else RidgeSpec(float(ridge))


def regularized_scatter(design: AugmentedDesign, ridge: RidgeSpec) -> np.ndarray:
    xa = design.xa
    a = xa.T @ xa
    a[np.diag_indices_from(a)] += ridge.lam * ridge.penalty_mask(design.p)
    return a


def fit_ridge(design, response, ridge=RidgeSpec()) -> np.ndarray:
    """Weights ``beta = (Xa'Xa + lam I0)^-1 Xa'y`` stacked as ``[w; b]``.

    ``response`` may be a vector (returns length P+1) or an N x C matrix
    (returns (P+1) x C).
    """
    design, ridge = _as_design(design), _as_ridge(ridge)
    y = np.asarray(response, dtype=float)
    if y.shape[0] != design.n:
        raise ArgumentError("response length does not match the design")
    factor = spd_factor(regularized_scatter(design, ridge), "regularized scatter Xa'Xa + lam*I0")
    return linalg.cho_solve(factor, design.xa.T @ y)


def hat_matrix(design, ridge=RidgeSpec()) -> HatMatrix:
    design, ridge = _as_design(design), _as_ridge(ridge)
    factor = spd_factor(regularized_scatter(design, ridge), "regularized scatter Xa'Xa + lam*I0")
    # H = G'G with G = U^-T Xa' keeps H symmetric positive semidefinite
    g = linalg.solve_triangular(factor[0], design.xa.T, trans="T", lower=False)
    h = g.T @ g
    h = (h + h.T) / 2
    h.setflags(write=False)
    return HatMatrix(h, design, ridge, factor)


def woodbury_train_inverse(s_full, design_test) -> np.ndarray:
    """Training-set inverse scatter from the full one by removing test rows.

    Computes ``S + S Xte' (I - Xte S Xte')^-1 Xte S``. Only used to check
    the weight update; the cross-validation path never forms it.
    """
    s = np.asarray(s_full, dtype=float)
    xte = np.asarray(design_test.xa if isinstance(design_test, AugmentedDesign) else design_test,
                     dtype=float)
    if xte.size == 0:
        return s.copy()
    xte = np.atleast_2d(xte)
    sx = s @ xte.T
    m = np.eye(xte.shape[0]) - xte @ sx
    try:
        lu = linalg.lu_factor(m, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularityError(f"(I - H_Te) could not be factorized: {exc}") from None
    rcond, _ = lapack.dgecon(lu[0], np.linalg.norm(m, 1))
    if not rcond > RCOND_MIN:
        raise SingularityError(
            f"(I - H_Te) is numerically singular (reciprocal condition {rcond:.3e})", float(rcond)
        )
    return s + sx @ linalg.lu_solve(lu, sx.T)


def shrink_to_ridge(lambda_shrink: float, nu: float) -> float:
    """Ridge penalty whose regularized scatter is proportional to the shrinkage one."""
    if not 0 <= lambda_shrink < 1:
        raise ArgumentError(f"shrinkage parameter must lie in [0, 1), got {lambda_shrink}")
    if not nu > 0:
        raise ArgumentError(f"nu must be positive, got {nu}")
    return lambda_shrink / (1 - lambda_shrink) * nu


def scatter_trace_scale(within_scatter) -> float:
    s = np.asarray(within_scatter, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
        raise ArgumentError("within-class scatter must be a non-empty square matrix")
    return float(np.trace(s) / s.shape[0])
