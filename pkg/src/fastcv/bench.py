"""Timing harness comparing naive retraining with the analytical path.

Every grid cell generates one dataset, one fold partition and one
permutation plan from a seed derived from the cell coordinates. Both
methods consume exactly those inputs; each timed region covers the whole
cross-validation/permutation loop (including the hat matrix for the
analytical path) and runs with BLAS limited to ``threads`` threads.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import metrics
from .binary import labels_to_pm1, permutation_test_binary
from .errors import ArgumentError, FastCVError
from .lda_oracle import naive_permutation_test, scatter_matrices
from .lsq_core import hat_matrix, scatter_trace_scale
from .multiclass import permutation_test_multiclass
from .synthgen import (
    Dataset,
    FoldPartition,
    PermutationPlan,
    derive_seed,
    make_folds,
    make_permutation_plan,
    make_synthetic,
)

log = logging.getLogger(__name__)

CSV_HEADER = (
    "method", "task", "n_samples", "n_features", "n_classes", "n_folds",
    "n_permutations", "repeat", "seed", "wall_time_seconds", "performance_mean",
)
METHODS = ("standard", "analytic")
BENCH_TASKS = ("binary", "multiclass")
AUTO_LAMBDA_FACTOR = 1e-3


@dataclass
class BenchConfig:
    tasks: list = field(default_factory=lambda: ["binary"])
    n_samples: list = field(default_factory=lambda: [100, 1000])
    n_features: list = field(default_factory=lambda: [10, 100, 1000])
    n_classes: list = field(default_factory=lambda: [5])
    # "N" means leave-one-out
    n_folds: list = field(default_factory=lambda: [5, 10, "N"])
    n_permutations: list = field(default_factory=lambda: [1, 100])
    repeats: int = 3
    lam: float | str = "auto"
    metric: str = "accuracy"
    stratify: bool = True
    seed: int = 0
    threads: int = 1
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("tasks", "n_samples", "n_features", "n_classes", "n_folds", "n_permutations"):
            if not getattr(self, name):
                raise ArgumentError(f"bench grid '{name}' must not be empty")
        bad = set(self.tasks) - set(BENCH_TASKS)
        if bad:
            raise ArgumentError(f"unknown task(s) {sorted(bad)}; choose from {BENCH_TASKS}")
        if self.repeats < 1:
            raise ArgumentError("repeats must be >= 1")
        if self.metric not in metrics.METRICS:
            raise ArgumentError(f"unknown metric {self.metric!r}")
        if self.format not in ("csv", "json"):
            raise ArgumentError("format must be csv or json")
        if self.threads < 1:
            raise ArgumentError("threads must be >= 1")
        if self.lam != "auto" and not float(self.lam) >= 0:
            raise ArgumentError("lambda must be 'auto' or a non-negative number")

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        aliases = {"lambda": "lam"}
        kwargs = {}
        for key, value in data.items():
            key = aliases.get(key, key)
            if key not in known:
                raise ArgumentError(f"unknown bench config key {key!r}")
            kwargs[key] = value
        return cls(**kwargs)

    def cells(self):
        """Grid cells ``(task, N, P, C, K, T)`` in deterministic order."""
        for task, n, p in itertools.product(self.tasks, self.n_samples, self.n_features):
            classes = [2] if task == "binary" else self.n_classes
            for c, k, t in itertools.product(classes, self.n_folds, self.n_permutations):
                k = n if k == "N" else int(k)
                if not 2 <= k <= n:
                    log.warning("skipping cell N=%d K=%d: need 2 <= K <= N", n, k)
                    continue
                yield task, int(n), int(p), int(c), k, int(t)


@dataclass(frozen=True)
class BenchRecord:
    method: str
    task: str
    n_samples: int
    n_features: int
    n_classes: int
    n_folds: int
    n_permutations: int
    repeat: int
    seed: int
    wall_time_seconds: float | None
    performance_mean: float | None
    input_hash: str = ""
    error: str | None = None

    def csv_row(self):
        row = [getattr(self, name) for name in CSV_HEADER]
        if self.error is not None:
            row[-2:] = ["error", "error"]
        return row

    @property
    def cell(self):
        return (self.task, self.n_samples, self.n_features, self.n_classes,
                self.n_folds, self.n_permutations, self.repeat)


def default_lambda(dataset: Dataset) -> float:
    return AUTO_LAMBDA_FACTOR * scatter_trace_scale(scatter_matrices(dataset).s_w)


def input_hash(dataset: Dataset, partition: FoldPartition, plan: PermutationPlan, lam: float) -> str:
    h = hashlib.sha256()
    h.update(dataset.features.tobytes())
    h.update(dataset.labels.tobytes())
    for f in partition.folds:
        h.update(np.int64(f.size).tobytes())
        h.update(f.astype(np.int64).tobytes())
    h.update(plan.permutations.astype(np.int64).tobytes())
    h.update(np.float64(lam).tobytes())
    return h.hexdigest()


def run_standard(task, dataset, partition, plan, lam, metric) -> np.ndarray:
    naive_task = "binary_lda" if task == "binary" else "multiclass"
    return naive_permutation_test(dataset, partition, plan, naive_task, lam, metric)


def run_analytic(task, dataset, partition, plan, lam, metric) -> np.ndarray:
    hat = hat_matrix(dataset.features, lam)
    if task == "binary":
        return permutation_test_binary(hat, labels_to_pm1(dataset.labels), partition, plan,
                                       metric=metric, adjust=metric == "accuracy")
    return permutation_test_multiclass(hat, dataset.labels, partition, plan, dataset.n_classes)


RUNNERS = {"standard": run_standard, "analytic": run_analytic}


def timed(fn, *args, threads: int = 1):
    with threadpool_limits(limits=threads):
        start = time.perf_counter()
        result = fn(*args)
        elapsed = time.perf_counter() - start
    return result, elapsed


def run_cell(cfg: BenchConfig, task, n, p, c, k, t, repeat) -> list[BenchRecord]:
    seed = derive_seed(cfg.seed, task, n, p, c, k, t, repeat)
    common = dict(task=task, n_samples=n, n_features=p, n_classes=c, n_folds=k,
                  n_permutations=t, repeat=repeat, seed=seed)
    try:
        dataset = make_synthetic(n, p, c, seed)
        partition = make_folds(n, k, seed, dataset.labels if cfg.stratify else None)
        plan = make_permutation_plan(n, t, seed)
        lam = default_lambda(dataset) if cfg.lam == "auto" else float(cfg.lam)
        digest = input_hash(dataset, partition, plan, lam)
    except FastCVError as exc:
        return [BenchRecord(method=m, wall_time_seconds=None, performance_mean=None,
                            error=str(exc), **common) for m in METHODS]
    records = []
    for method in METHODS:
        try:
            perf, elapsed = timed(RUNNERS[method], task, dataset, partition, plan, lam,
                                  cfg.metric, threads=cfg.threads)
        except FastCVError as exc:
            log.warning("cell %s failed for %s: %s", common, method, exc)
            records.append(BenchRecord(method=method, wall_time_seconds=None,
                                       performance_mean=None, input_hash=digest,
                                       error=str(exc), **common))
            continue
        records.append(BenchRecord(method=method, wall_time_seconds=elapsed,
                                   performance_mean=float(np.mean(perf)),
                                   input_hash=digest, **common))
    return records


def run_bench(cfg: BenchConfig, progress=None) -> list[BenchRecord]:
    records = []
    for cell in cfg.cells():
        for repeat in range(cfg.repeats):
            recs = run_cell(cfg, *cell, repeat)
            records.extend(recs)
            if progress is not None:
                progress(recs)
    order = {m: i for i, m in enumerate(METHODS)}
    records.sort(key=lambda r: (r.cell, order[r.method]))
    return records


def relative_efficiencies(records) -> list[dict]:
    """One relative-efficiency value per cell where both methods succeeded."""
    paired = {}
    for r in records:
        paired.setdefault(r.cell, {})[r.method] = r
    out = []
    for cell, pair in paired.items():
        std, ana = pair.get("standard"), pair.get("analytic")
        if std is None or ana is None or std.error or ana.error:
            continue
        out.append({
            "task": cell[0], "n_samples": cell[1], "n_features": cell[2], "n_classes": cell[3],
            "n_folds": cell[4], "n_permutations": cell[5], "repeat": cell[6],
            "relative_efficiency": metrics.relative_efficiency(std.wall_time_seconds,
                                                               ana.wall_time_seconds),
            "performance_gap": abs(std.performance_mean - ana.performance_mean),
        })
    return out


def format_records(records, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps([asdict(r) for r in records], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def write_records(records, path, fmt: str = "csv"):
    text = format_records(records, fmt)
    if path is None or str(path) == "-":
        return text
    Path(path).write_text(text)
    return text
