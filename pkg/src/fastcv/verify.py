"""Self-check suite run by ``fastcv verify``.

Each registered property sweeps its grid, records the worst deviation
seen and the cell where it occurred, and passes iff that deviation is
within tolerance. ``faults`` deliberately breaks one step so the suite
can be shown to catch it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .binary import adjust_bias, cv_decision_values, labels_to_pm1, permutation_test_binary
from .lda_oracle import (
    between_scatter_two_class,
    fit_binary_lda,
    fit_multiclass_lda,
    generalized_eigh,
    naive_crossval,
    naive_permutation_test,
    scatter_matrices,
)
from .lsq_core import (
    augment,
    fit_ridge,
    hat_matrix,
    scatter_trace_scale,
    shrink_to_ridge,
    woodbury_train_inverse,
)
from .multiclass import (
    cv_multiclass,
    indicator_matrix,
    os_step2,
    permutation_test_multiclass,
)
from .synthgen import derive_seed, make_folds, make_permutation_plan, make_synthetic, rng_for

FAULTS = ("skip_bias_adjustment",)


@dataclass
class VerifyConfig:
    seed: int = 0
    n_seeds: int = 5
    n_eigenpair_instances: int = 100
    n_identity_datasets: int = 20
    n_permutations: int = 50
    faults: frozenset = field(default_factory=frozenset)


@dataclass
class PropertyResult:
    name: str
    max_deviation: float
    tolerance: float
    cell: dict | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: max deviation {self.max_deviation:.3e} (tolerance {self.tolerance:.0e})"
        if self.note:
            text += f"; {self.note}"
        if not self.passed and self.cell is not None:
            text += f"; failing cell {self.cell}"
        return text


class _Worst:
    def __init__(self):
        self.value = 0.0
        self.cell = None

    def update(self, value, cell):
        if value > self.value or self.cell is None:
            if value >= self.value:
                self.value, self.cell = float(value), cell


def _cosine(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


BINARY_GRID = dict(n=(16, 60), p=(2, 10, 40, 80), k=(2, 5, "N"), lam=(0.01, 1.0, 10.0))


def _binary_cells(cfg, ratios=((1, 1),)):
    for n, p, k, lam, ratio, s in itertools.product(
        BINARY_GRID["n"], BINARY_GRID["p"], BINARY_GRID["k"], BINARY_GRID["lam"], ratios,
        range(cfg.n_seeds),
    ):
        k = n if k == "N" else k
        n1 = round(n * ratio[0] / sum(ratio))
        seed = derive_seed(cfg.seed, "binary", n, p, k, lam, ratio, s)
        ds = make_synthetic(n, p, 2, seed, class_sizes=[n1, n - n1])
        part = make_folds(n, k, seed, ds.labels)
        yield dict(n=n, p=p, k=k, lam=lam, ratio=ratio, seed=seed), ds, part


def binary_oracle_equivalence(cfg) -> PropertyResult:
    worst = _Worst()
    for cell, ds, part in _binary_cells(cfg):
        hat = hat_matrix(ds.features, cell["lam"])
        fast = cv_decision_values(hat, labels_to_pm1(ds.labels), part).decision_values
        ref = naive_crossval(ds, part, "binary_regressionform", cell["lam"]).decision_values
        worst.update(np.max(np.abs(fast - ref)) / np.max(np.abs(ref)), cell)
    return PropertyResult("binary_oracle_equivalence", worst.value, 1e-8, worst.cell)


def bias_adjustment_sign_agreement(cfg) -> PropertyResult:
    worst = _Worst()
    for cell, ds, part in _binary_cells(cfg, ratios=((1, 1), (3, 1), (7, 1))):
        y = labels_to_pm1(ds.labels)
        hat = hat_matrix(ds.features, cell["lam"])
        raw = cv_decision_values(hat, y, part)
        vals = raw.decision_values
        if "skip_bias_adjustment" not in cfg.faults:
            vals = adjust_bias(hat, y, part, raw).adjusted_values
        ref = naive_crossval(ds, part, "binary_lda", cell["lam"]).decision_values
        ok = np.abs(vals) > 1e-10
        worst.update(np.count_nonzero(np.sign(vals[ok]) != np.sign(ref[ok])), cell)
    return PropertyResult("bias_adjustment_sign_agreement", worst.value, 0, worst.cell,
                          "deviation = mismatched samples per cell")


def multiclass_label_equivalence(cfg) -> PropertyResult:
    worst = _Worst()
    excluded = total = 0
    for n, p, c, k, lam, s in itertools.product((30, 90), (4, 20, 60), (3, 5), (3, 5), (0.1, 1.0),
                                                range(cfg.n_seeds)):
        seed = derive_seed(cfg.seed, "multiclass", n, p, c, k, lam, s)
        ds = make_synthetic(n, p, c, seed)
        part = make_folds(n, k, seed, ds.labels)
        fast = cv_multiclass(hat_matrix(ds.features, lam), ds.labels, part)
        ref = naive_crossval(ds, part, "multiclass", lam)
        clear = (fast.margins >= 1e-9) & (ref.margins >= 1e-9)
        excluded += int(np.count_nonzero(~clear))
        total += n
        worst.update(np.count_nonzero(fast.predicted[clear] != ref.predicted[clear]),
                     dict(n=n, p=p, c=c, k=k, lam=lam, seed=seed))
    frac = excluded / total
    res = PropertyResult("multiclass_label_equivalence", worst.value, 0, worst.cell,
                         f"excluded {excluded}/{total} ambiguous samples")
    if frac >= 0.01:
        res.max_deviation = max(res.max_deviation, np.inf)
    return res


def os_lda_identity(cfg) -> PropertyResult:
    worst = _Worst()
    rng = rng_for(cfg.seed, 101)
    for i in range(cfg.n_identity_datasets):
        n, p, c = int(rng.integers(20, 120)), int(rng.integers(4, 60)), int(rng.integers(2, 7))
        lam = float(10 ** rng.uniform(-2, 1))
        ds = make_synthetic(n, p, c, int(rng.integers(2**32)))
        y_mat = indicator_matrix(ds.labels, c)
        b = fit_ridge(ds.features, y_mat, lam)[:-1]
        os = os_step2(hat_matrix(ds.features, lam).fitted(y_mat), y_mat)
        w_os = b @ os.theta @ os.d_scale
        w_lda = fit_multiclass_lda(ds, lam=lam).w_mat
        cos = min(abs(_cosine(w_os[:, j], w_lda[:, j])) for j in range(c - 1))
        worst.update(1 - cos, dict(n=n, p=p, c=c, lam=lam))
    return PropertyResult("os_lda_identity", worst.value, 1e-6, worst.cell,
                          "deviation = 1 - min per-column |cosine|")


def permutation_path_equality(cfg) -> PropertyResult:
    worst = _Worst()
    t = cfg.n_permutations
    for task, (n, p, c, k, lam) in [
        ("binary", (40, 30, 2, 5, 1.0)),
        ("binary", (30, 60, 2, 10, 0.1)),
        ("multiclass", (45, 20, 3, 5, 1.0)),
        ("multiclass", (60, 80, 4, 4, 0.5)),
    ]:
        seed = derive_seed(cfg.seed, "perm", task, n, p)
        ds = make_synthetic(n, p, c, seed)
        part = make_folds(n, k, seed, ds.labels)
        plan = make_permutation_plan(n, t, seed)
        hat = hat_matrix(ds.features, lam)
        if task == "binary":
            fast = permutation_test_binary(hat, labels_to_pm1(ds.labels), part, plan)
            ref = naive_permutation_test(ds, part, plan, "binary_regressionform", lam)
        else:
            fast = permutation_test_multiclass(hat, ds.labels, part, plan)
            ref = naive_permutation_test(ds, part, plan, "multiclass", lam)
        cell = dict(task=task, n=n, p=p, c=c, k=k, lam=lam, seed=seed)
        worst.update(np.max(np.abs(fast - ref)), cell)
        if not np.array_equal(hat_matrix(ds.features, lam).h, hat.h):
            worst.update(np.inf, dict(cell, check="hat matrix recompute"))
    return PropertyResult("permutation_path_equality", worst.value, 1e-8, worst.cell)


def two_class_eigenpair(cfg) -> PropertyResult:
    worst = _Worst()
    rng = rng_for(cfg.seed, 102)
    for i in range(cfg.n_eigenpair_instances):
        p = int(rng.integers(2, 30))
        a = rng.standard_normal((p, p + 5))
        s_w = a @ a.T
        m1, m2 = rng.standard_normal(p), rng.standard_normal(p)
        n1, n2 = int(rng.integers(1, 50)), int(rng.integers(1, 50))
        s_b = between_scatter_two_class(m1, m2, n1, n2)
        mu, v = generalized_eigh(s_b, s_w, p)
        delta = m1 - m2
        w = np.linalg.solve(s_w, delta)
        expected = n1 * n2 / (n1 + n2) * delta @ w
        dev = max(
            abs(mu[0] - expected) / expected,
            float(np.max(np.abs(mu[1:]))) / mu[0] if p > 1 else 0.0,
            1 - abs(_cosine(v[:, 0], w)),
            0.0 if expected > 0 else np.inf,
        )
        worst.update(dev, dict(instance=i, p=p))
    return PropertyResult("two_class_eigenpair", worst.value, 1e-8, worst.cell)


def _binary_samples(rng, n, p):
    seed = int(rng.integers(2**32))
    ds = make_synthetic(n, p, 2, seed, class_sizes=[n - n // 3, n // 3])
    return ds, scatter_matrices(ds)


def regression_lda_collinearity(cfg) -> PropertyResult:
    worst = _Worst()
    rng = rng_for(cfg.seed, 103)
    for i in range(20):
        n, p = int(rng.integers(30, 80)), int(rng.integers(2, 20))
        ds, sc = _binary_samples(rng, n, p)
        lda_w = np.linalg.solve(sc.s_w, sc.means[0] - sc.means[1])
        for z1, z2 in ((1.0, -1.0), (1.0, 0.0), (3.0, -0.5), (-2.0, 5.0)):
            y = np.where(ds.labels == 1, z1, z2)
            w = fit_ridge(ds.features, y, 0.0)[:-1]
            cos = _cosine(w, lda_w)
            # the direction flips with the sign of z1 - z2 and nothing else
            worst.update(1 - np.sign(z1 - z2) * cos, dict(instance=i, codes=(z1, z2)))
    return PropertyResult("regression_lda_collinearity", worst.value, 1e-8, worst.cell)


def ridge_lda_correspondence(cfg) -> PropertyResult:
    worst = _Worst()
    rng = rng_for(cfg.seed, 104)
    for i in range(20):
        n, p = int(rng.integers(10, 60)), int(rng.integers(2, 90))
        lam = float(10 ** rng.uniform(-2, 2))
        ds, sc = _binary_samples(rng, n, p)
        w = fit_ridge(ds.features, labels_to_pm1(ds.labels), lam)[:-1]
        ref = np.linalg.solve(sc.s_w + lam * np.eye(p), sc.means[0] - sc.means[1])
        worst.update(1 - _cosine(w, ref), dict(instance=i, n=n, p=p, lam=lam))
    return PropertyResult("ridge_lda_correspondence", worst.value, 1e-8, worst.cell)


def shrinkage_ridge_direction(cfg) -> PropertyResult:
    worst = _Worst()
    rng = rng_for(cfg.seed, 105)
    for i in range(20):
        n, p = int(rng.integers(10, 60)), int(rng.integers(2, 90))
        lam_s = float(rng.uniform(0.01, 0.99))
        ds, sc = _binary_samples(rng, n, p)
        nu = scatter_trace_scale(sc.s_w)
        w_shrink = fit_binary_lda(ds, lam=lam_s, mode="shrinkage").w
        w_ridge = fit_binary_lda(ds, lam=shrink_to_ridge(lam_s, nu), mode="ridge").w
        worst.update(1 - _cosine(w_shrink, w_ridge), dict(instance=i, n=n, p=p, lam=lam_s))
    return PropertyResult("shrinkage_ridge_direction", worst.value, 1e-8, worst.cell)


def woodbury_weight_update(cfg) -> PropertyResult:
    worst = _Worst()
    rng = rng_for(cfg.seed, 106)
    for i in range(20):
        n, p = int(rng.integers(8, 40)), int(rng.integers(1, 30))
        lam = float(10 ** rng.uniform(-1, 1))
        x = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        te = np.sort(rng.choice(n, int(rng.integers(1, n // 2 + 1)), replace=False))
        tr = np.setdiff1d(np.arange(n), te)
        hat = hat_matrix(x, lam)
        xa = augment(x).xa
        s_tr = woodbury_train_inverse(hat.s, xa[te])
        beta_hat = fit_ridge(x, y, lam)
        # weights after removing Te, from the full-data fit and the test residuals
        e_te = y[te] - xa[te] @ beta_hat
        m = np.eye(te.size) - hat.h[np.ix_(te, te)]
        beta_dot = beta_hat - hat.s @ xa[te].T @ np.linalg.solve(m, e_te)
        beta_ref = fit_ridge(x[tr], y[tr], lam)
        s_ref = np.linalg.inv(xa[tr].T @ xa[tr] + lam * np.diag(np.r_[np.ones(p), 0.0]))
        dev = max(np.max(np.abs(s_tr - s_ref)) / np.max(np.abs(s_ref)),
                  np.max(np.abs(beta_dot - beta_ref)) / np.max(np.abs(beta_ref)))
        worst.update(dev, dict(instance=i, n=n, p=p, lam=lam, n_test=te.size))
    return PropertyResult("woodbury_weight_update", worst.value, 1e-9, worst.cell)


PROPERTIES = {
    "binary_oracle_equivalence": binary_oracle_equivalence,
    "bias_adjustment_sign_agreement": bias_adjustment_sign_agreement,
    "multiclass_label_equivalence": multiclass_label_equivalence,
    "os_lda_identity": os_lda_identity,
    "permutation_path_equality": permutation_path_equality,
    "two_class_eigenpair": two_class_eigenpair,
    "regression_lda_collinearity": regression_lda_collinearity,
    "ridge_lda_correspondence": ridge_lda_correspondence,
    "shrinkage_ridge_direction": shrinkage_ridge_direction,
    "woodbury_weight_update": woodbury_weight_update,
}


def run_verify(cfg: VerifyConfig, report=print) -> list[PropertyResult]:
    results = []
    for name, check in PROPERTIES.items():
        res = check(cfg)
        results.append(res)
        if report is not None:
            report(res.line())
    return results
