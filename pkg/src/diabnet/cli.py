"""Command-line interface: preprocess | train | evaluate | experiment.

Every command reads one INI config (see config.py) and writes its
artifacts under the configured output directory:

  preprocess  preprocess.json       split indices, normalizer, imputation
  train       model.adpm, meta.json, metrics.jsonl (appended)
  evaluate    metrics.jsonl (appended), metrics printed to stdout
  experiment  report.json, report printed as an aligned table

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
failure. Reruns with identical config, seed, and inputs are
deterministic (the wall-clock field aside).
"""

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from .config import load_config
from .errors import PipelineError
from .pipeline import (
    RunResult,
    evaluate_weights,
    format_report,
    metrics_record,
    prepare_data,
    report_to_dict,
    run_configuration,
    run_experiment,
)
from .weights_io import load_weights, save_weights

_JSON_KWARGS = {"sort_keys": True, "indent": 2}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this surface reserves 2 for
    data errors, so remap usage problems to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(
        prog="diabnet",
        description="Tabular diabetes-detection pipeline: VAE balancing, "
        "sparse-autoencoder features, MLP/CNN classifiers, joint training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("preprocess", "write split/normalizer/imputation sidecar"),
        ("train", "train the configured pipeline and save weights"),
        ("evaluate", "score saved weights on the held-out test split"),
        ("experiment", "run all five configurations and compare them"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="INI config path")
        cmd.add_argument("--seed", type=int, default=None, help="override global seed")
        cmd.add_argument("--out", default=None, help="override output directory")
        if name == "evaluate":
            cmd.add_argument(
                "--weights",
                default=None,
                help="weight container (default: <out_dir>/model.adpm)",
            )
        if name == "experiment":
            cmd.add_argument(
                "--repeats",
                type=int,
                default=11,
                help="runs per configuration (sae_with_cnn gets one more)",
            )
    return parser


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(Path(args.out).resolve()))
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    return cfg


def _append_metrics(cfg, record):
    line = json.dumps(record, sort_keys=True)
    with open(Path(cfg.out_dir) / "metrics.jsonl", "a") as handle:
        handle.write(line + "\n")
    return line


def cmd_preprocess(args):
    cfg = _load(args)
    data = prepare_data(cfg)
    zeros, ones = data.train.class_counts()
    sidecar = {
        "csv": cfg.csv,
        "seed": cfg.seed,
        "split_ratio": cfg.split_ratio,
        "train_indices": data.split_train.tolist(),
        "test_indices": data.split_test.tolist(),
        "train_rows": int(data.split_train.size),
        "test_rows": int(data.split_test.size),
        "train_class_counts": {"0": zeros, "1": ones},
        "imputation_means": {
            str(col): mean for col, mean in data.imputer.means_.items()
        },
        "normalizer": data.normalizer.to_dict(),
    }
    path = Path(cfg.out_dir) / "preprocess.json"
    path.write_text(json.dumps(sidecar, **_JSON_KWARGS) + "\n")
    print(
        f"wrote {path}: train={sidecar['train_rows']}/test={sidecar['test_rows']}"
    )
    return 0


def cmd_train(args):
    cfg = _load(args)
    result = run_configuration(cfg)
    out = Path(cfg.out_dir)
    weights_path = out / "model.adpm"
    save_weights(weights_path, result.weights)

    # Score from the container itself so a later `evaluate` of the same
    # file reports the identical accuracy (32-bit storage included).
    metrics = evaluate_weights(cfg, load_weights(weights_path))
    result = replace(result, metrics=metrics)

    meta = {
        "configuration": result.config_name,
        "seed": result.seed,
        "tensors": sorted(result.weights),
        "weights_file": weights_path.name,
    }
    (out / "meta.json").write_text(json.dumps(meta, **_JSON_KWARGS) + "\n")
    line = _append_metrics(cfg, metrics_record(result))
    print(line)
    return 0


def cmd_evaluate(args):
    cfg = _load(args)
    weights_path = (
        Path(args.weights) if args.weights else Path(cfg.out_dir) / "model.adpm"
    )
    start = time.perf_counter()
    metrics = evaluate_weights(cfg, load_weights(weights_path))
    result = RunResult(
        config_name=metrics.config_label,
        seed=cfg.seed,
        metrics=metrics,
        weights={},
        history={},
        wall_seconds=time.perf_counter() - start,
    )
    line = _append_metrics(cfg, metrics_record(result))
    print(line)
    return 0


def cmd_experiment(args):
    cfg = _load(args)
    report = run_experiment(cfg, repeats=args.repeats)
    path = Path(cfg.out_dir) / "report.json"
    path.write_text(json.dumps(report_to_dict(report), **_JSON_KWARGS) + "\n")
    for result in report.metrics:
        _append_metrics(
            cfg,
            {
                "config": result.config_label,
                "seed": result.seed,
                "accuracy": result.accuracy,
                "tp": result.tp,
                "tn": result.tn,
                "fp": result.fp,
                "fn": result.fn,
            },
        )
    print(format_report(report))
    return 0


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
}


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse already printed the diagnostic
        return exc.code
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
