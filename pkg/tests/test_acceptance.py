"""End-to-end acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary. Criterion 7 is a timing benchmark of a few minutes.
"""

import time

import numpy as np
import pytest

from fastcv import verify
from fastcv.bench import BenchConfig, relative_efficiencies, run_cell
from fastcv.binary import labels_to_pm1, permutation_test_binary
from fastcv.cli import run_dataset
from fastcv.lsq_core import hat_matrix
from fastcv.synthgen import make_folds, make_permutation_plan

from conftest import noise_dataset, record_acceptance, separable_dataset

CFG = verify.VerifyConfig(seed=0, n_seeds=5, n_eigenpair_instances=100, n_identity_datasets=20,
                          n_permutations=50)


def run_property(fn):
    start = time.perf_counter()
    res = fn(CFG)
    return res, time.perf_counter() - start


def test_criterion_1_binary_oracle_equivalence():
    res, elapsed = run_property(verify.binary_oracle_equivalence)
    ok = res.passed and elapsed < 30
    record_acceptance(1, "binary oracle equivalence", ok,
                      f"max rel deviation {res.max_deviation:.2e} <= 1e-08, runtime {elapsed:.1f}s < 30s")
    assert res.passed, res.line()
    assert elapsed < 30


def test_criterion_2_bias_adjusted_sign_agreement():
    res, _ = run_property(verify.bias_adjustment_sign_agreement)
    record_acceptance(2, "bias-adjusted sign agreement", res.passed,
                      f"{int(res.max_deviation)} mismatched samples in the worst cell")
    assert res.passed, res.line()


def test_criterion_3_multiclass_label_equivalence():
    res, _ = run_property(verify.multiclass_label_equivalence)
    record_acceptance(3, "multiclass label equivalence", res.passed,
                      f"{int(res.max_deviation) if np.isfinite(res.max_deviation) else 'inf'} mismatches; {res.note}")
    assert res.passed, res.line()


def test_criterion_4_os_lda_identity():
    res, _ = run_property(verify.os_lda_identity)
    record_acceptance(4, "optimal scoring / LDA identity", res.passed,
                      f"min |cosine| = 1 - {res.max_deviation:.2e} >= 1 - 1e-06")
    assert res.passed, res.line()


def test_criterion_5_permutation_path_equality():
    res, _ = run_property(verify.permutation_path_equality)
    record_acceptance(5, "permutation path equality", res.passed,
                      f"max deviation {res.max_deviation:.2e} <= 1e-08 over T=50; H recompute bit-identical")
    assert res.passed, res.line()


def test_criterion_6_identity_suite():
    results = [verify.two_class_eigenpair(CFG), verify.regression_lda_collinearity(CFG),
               verify.ridge_lda_correspondence(CFG), verify.shrinkage_ridge_direction(CFG)]
    ok = all(r.passed for r in results)
    detail = ", ".join(f"{r.name} {r.max_deviation:.1e}" for r in results)
    record_acceptance(6, "eigenpair / collinearity / ridge / shrinkage suite", ok, detail + " (tol 1e-08)")
    assert ok, "\n".join(r.line() for r in results)


@pytest.mark.slow
def test_criterion_7_relative_efficiency():
    start = time.perf_counter()
    cfg = BenchConfig(tasks=["binary", "multiclass"], n_samples=[100], n_features=[10, 1000],
                      n_classes=[5], n_folds=[10], n_permutations=[100], repeats=1, seed=0)
    records = []
    for task, p in [("binary", 10), ("binary", 1000), ("multiclass", 1000)]:
        c = 2 if task == "binary" else 5
        records += run_cell(cfg, task, 100, p, c, 10, 100, 0)
    elapsed = time.perf_counter() - start
    assert not any(r.error for r in records), [r.error for r in records if r.error]
    eff = {(e["task"], e["n_features"]): e["relative_efficiency"] for e in relative_efficiencies(records)}
    binary_hi, binary_lo = eff[("binary", 1000)], eff[("binary", 10)]
    multi_hi = eff[("multiclass", 1000)]
    ok = binary_hi >= 1.0 and multi_hi >= 1.0 and binary_hi - binary_lo >= 1.0 and elapsed < 600
    record_acceptance(7, "relative efficiency", ok,
                      f"binary P=1000 {binary_hi:.2f} >= 1, multiclass P=1000 {multi_hi:.2f} >= 1, "
                      f"binary gain over P=10 {binary_hi - binary_lo:.2f} >= 1, runtime {elapsed:.0f}s < 600s")
    assert binary_hi >= 1.0
    assert multi_hi >= 1.0
    assert binary_hi - binary_lo >= 1.0
    assert elapsed < 600


def test_criterion_8_statistical_sanity():
    ds = noise_dataset(n=200, p=20, seed=8)
    part = make_folds(200, 10, 8, ds.labels)
    plan = make_permutation_plan(200, 100, 8)
    perf = permutation_test_binary(hat_matrix(ds.features, 1.0), labels_to_pm1(ds.labels), part,
                                   plan, adjust=True)
    sep = separable_dataset(n_per_class=20, p=5)
    result = run_dataset(sep, "binary", 10, "auto", 100, "accuracy", True, 8)
    ok = 0.45 <= perf.mean() <= 0.55 and result["p_value"] == pytest.approx(1 / 101)
    record_acceptance(8, "statistical sanity", ok,
                      f"noise mean permutation accuracy {perf.mean():.3f} in [0.45, 0.55], "
                      f"separable p = {result['p_value']:.5f} (1/101 = {1 / 101:.5f})")
    assert 0.45 <= perf.mean() <= 0.55
    assert result["p_value"] == pytest.approx(1 / 101)
