"""``fastcv`` command line: ``verify``, ``bench`` and ``run`` subcommands.

Exit codes: 0 ok, 1 verification failure, 2 argument error, 3 I/O error,
4 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, verify
from .binary import adjust_bias, cv_decision_values, labels_to_pm1, permutation_test_binary
from .errors import ArgumentError, DegenerateClassError, DegenerateFoldError, FastCVError
from .lsq_core import hat_matrix
from .metrics import METRICS
from .multiclass import cv_multiclass, permutation_test_multiclass
from .synthgen import load_csv, make_folds, make_permutation_plan

log = logging.getLogger("fastcv")

EXIT_OK, EXIT_VERIFY, EXIT_ARGS, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4
SEED_ENV = "FASTCV_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _int_list(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if item == "N":
            out.append("N")
            continue
        try:
            out.append(int(item))
        except ValueError:
            raise ArgumentError(f"expected an integer or 'N', got {item!r}") from None
    return out


def _lambda(text):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise ArgumentError(f"--lambda must be a number or 'auto', got {text!r}") from None
    if not value >= 0:
        raise ArgumentError("--lambda must be >= 0")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise ArgumentError(f"seed must be an unsigned integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise ArgumentError("seed must lie in [0, 2^64)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fastcv", description="Analytical cross-validation for LDA and ridge regression.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=_seed, help=f"master seed (fallback: ${SEED_ENV})")
    common.add_argument("--threads", type=int, help="BLAS threads inside timed regions")

    p = sub.add_parser("verify", parents=[common], help="run the correctness property suite")
    p.add_argument("--inject-fault", action="append", choices=verify.FAULTS, default=[],
                   help="deliberately break a step (negative control)")

    p = sub.add_parser("bench", parents=[common], help="time standard vs analytical CV over a grid")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--task", type=lambda s: s.split(","), help="comma list of binary,multiclass")
    p.add_argument("--folds", type=_int_list, help="comma list of fold counts, 'N' for leave-one-out")
    p.add_argument("--permutations", type=_int_list, help="comma list of permutation counts")
    p.add_argument("--lambda", dest="lam", type=_lambda)
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--stratify", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("run", parents=[common], help="cross-validate a CSV dataset")
    p.add_argument("dataset", help="CSV file: class label first, then features")
    p.add_argument("--task", choices=bench.BENCH_TASKS, default=None)
    p.add_argument("--folds", type=int)
    p.add_argument("--lambda", dest="lam", type=_lambda)
    p.add_argument("--permutations", type=int)
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--stratify", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--format", choices=("json",), default="json")
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ArgumentError(f"config {path} must hold a JSON object")
    return data


def _merge(config: dict, args, mapping: dict) -> dict:
    """Config values overridden by any flag the user actually passed."""
    out = dict(config)
    for flag, key in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            out.pop(key, None)
            if key == "lam":
                out.pop("lambda", None)
            out[key] = value
    return out


def _resolve_seed(args, config):
    if args.seed is not None:
        return args.seed
    if "seed" in config:
        return _seed(str(config["seed"]))
    env = os.environ.get(SEED_ENV)
    return _seed(env) if env else 0


def _check_writable(path):
    if path is None or path == "-":
        return
    # opening in append mode fails fast without clobbering an existing file
    with open(path, "a"):
        pass


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_verify(args) -> int:
    config = _load_config(args.config)
    config["seed"] = _resolve_seed(args, config)
    faults = set(config.pop("faults", [])) | set(args.inject_fault)
    unknown = faults - set(verify.FAULTS)
    if unknown:
        raise ArgumentError(f"unknown fault(s) {sorted(unknown)}")
    try:
        cfg = verify.VerifyConfig(faults=frozenset(faults), **config)
    except TypeError as exc:
        raise ArgumentError(f"bad verify config: {exc}") from None
    _check_writable(args.out)
    lines = []
    results = verify.run_verify(cfg, report=lambda line: (lines.append(line), print(line, flush=True)))
    failed = [r.name for r in results if not r.passed]
    summary = f"{len(results) - len(failed)}/{len(results)} properties passed"
    if failed:
        summary += "; failed: " + ", ".join(failed)
    print(summary)
    if args.out not in (None, "-"):
        Path(args.out).write_text("\n".join(lines + [summary]) + "\n")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    config = _merge(config, args, {
        "task": "tasks", "folds": "n_folds", "permutations": "n_permutations", "lam": "lam",
        "metric": "metric", "stratify": "stratify", "threads": "threads", "out": "out",
        "format": "format",
    })
    config["seed"] = _resolve_seed(args, config)
    cfg = bench.BenchConfig.from_dict(config)
    _check_writable(cfg.out)

    def progress(recs):
        for r in recs:
            log.info("%s %s N=%d P=%d C=%d K=%d T=%d rep=%d: %s", r.method, r.task, r.n_samples,
                     r.n_features, r.n_classes, r.n_folds, r.n_permutations, r.repeat,
                     r.error or f"{r.wall_time_seconds:.4f}s")

    records = bench.run_bench(cfg, progress)
    _emit(bench.format_records(records, cfg.format), cfg.out)
    return EXIT_OK


def run_dataset(dataset, task, n_folds, lam, n_permutations, metric, stratify, seed) -> dict:
    """Analytical CV (and optionally a permutation test) on a loaded dataset."""
    if task is None:
        task = "binary" if dataset.n_classes == 2 else "multiclass"
    if task == "binary" and dataset.n_classes != 2:
        raise ArgumentError(f"binary task needs 2 classes, found {dataset.n_classes}")
    if task == "multiclass" and metric != "accuracy":
        raise ArgumentError("multiclass runs support --metric accuracy only")
    if not 2 <= n_folds <= dataset.n_samples:
        raise ArgumentError(f"--folds must lie in 2..{dataset.n_samples}")
    if n_permutations < 0:
        raise ArgumentError("--permutations must be >= 0")
    lam_value = bench.default_lambda(dataset) if lam == "auto" else float(lam)
    partition = make_folds(dataset.n_samples, n_folds, seed, dataset.labels if stratify else None)
    hat = hat_matrix(dataset.features, lam_value)
    if task == "binary":
        y = labels_to_pm1(dataset.labels)
        res = cv_decision_values(hat, y, partition, metric)
        res = adjust_bias(hat, y, partition, res)
    else:
        res = cv_multiclass(hat, dataset.labels, partition, dataset.n_classes)
    out = {
        "task": task,
        "metric": metric,
        "n_samples": dataset.n_samples,
        "n_features": dataset.n_features,
        "n_classes": dataset.n_classes,
        "n_folds": n_folds,
        "lambda": lam_value,
        "seed": seed,
        "stratify": bool(stratify),
        "fold_performance": [float(v) for v in res.fold_performance],
        "performance_mean": res.mean(),
        "n_permutations": n_permutations,
    }
    if n_permutations > 0:
        plan = make_permutation_plan(dataset.n_samples, n_permutations + 1, seed)
        if task == "binary":
            perf = permutation_test_binary(hat, y, partition, plan, metric, adjust=True)
        else:
            perf = permutation_test_multiclass(hat, dataset.labels, partition, plan, dataset.n_classes)
        observed, null = perf[0], perf[1:]
        out["permutation_null"] = [float(v) for v in null]
        out["p_value"] = float((1 + np.count_nonzero(null >= observed)) / (n_permutations + 1))
    return out


def cmd_run(args) -> int:
    config = _load_config(args.config)
    config = _merge(config, args, {
        "task": "task", "folds": "n_folds", "lam": "lam", "permutations": "n_permutations",
        "metric": "metric", "stratify": "stratify",
    })
    if "lambda" in config:
        config["lam"] = config.pop("lambda")
    seed = _resolve_seed(args, config)
    _check_writable(args.out)
    dataset = load_csv(args.dataset)
    try:
        result = run_dataset(
            dataset,
            task=config.get("task"),
            n_folds=int(config.get("n_folds", 5)),
            lam=config.get("lam", "auto"),
            n_permutations=int(config.get("n_permutations", 0)),
            metric=config.get("metric", "accuracy"),
            stratify=bool(config.get("stratify", True)),
            seed=seed,
        )
    except DegenerateFoldError as exc:
        if config.get("stratify", True):
            hint = "every class needs at least two samples; use fewer folds"
        else:
            hint = "rerun with --stratify to keep every class in every training fold"
        raise DegenerateClassError(f"{exc}; {hint}") from None
    _emit(json.dumps(result, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "bench": cmd_bench, "run": cmd_run}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        if args.threads is not None and args.threads < 1:
            raise ArgumentError("--threads must be >= 1")
        return COMMANDS[args.command](args)
    except FastCVError as exc:
        print(f"fastcv: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fastcv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except np.linalg.LinAlgError as exc:
        print(f"fastcv: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
