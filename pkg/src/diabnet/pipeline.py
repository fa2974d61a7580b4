"""End-to-end training pipeline and the five-configuration experiment.

Every configuration shares one preprocessing chain — load, binarize
pregnancies, stratified split, train-fitted imputation and
normalization, VAE balancing — and differs only in what consumes the
balanced training set:

  mlp           classifier on the 8 raw (normalized) features
  sae_mlp       autoencoder features (400), then a separate MLP
  sae_cnn       autoencoder features reshaped 20x20, then a separate CNN
  sae_with_mlp  jointly trained encoder + MLP head
  sae_with_cnn  jointly trained encoder + CNN head

The experiment harness runs all five over deterministic per-run seeds
and compares held-out accuracies with one-way ANOVA plus Tukey's HSD.
"""

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .classifiers import build_cnn, build_mlp, predict, train_classifier
from .config import CONFIGURATION_NAMES
from .dataset import (
    Dataset,
    binarize_pregnancies,
    load_pima_csv,
    records_to_dataset,
)
from .errors import ConfigError, DataError
from .features import SaeModel, encode_features, train_sae
from .joint import build_joint, joint_predict, train_joint
from .oversample import balance_dataset, train_vae
from .preprocessing import ZeroAsMissingImputer, make_normalizer, stratified_split
from .rng import Rng
from .stats import RunGroup, accuracy_and_confusion, one_way_anova, tukey_hsd

#: Additive per-run seed stride; run index counts configuration-major
#: over CONFIGURATION_NAMES.
SEED_STRIDE = 10007


@dataclass(frozen=True)
class PreparedData:
    """Split, imputed, normalized data plus the fitted transforms."""

    train: Dataset
    test: Dataset
    split_train: np.ndarray
    split_test: np.ndarray
    imputer: ZeroAsMissingImputer
    normalizer: object


def prepare_data(cfg):
    """The configuration-independent preprocessing chain.

    Splitting uses the global seed so every run of an experiment is
    scored against the same held-out rows; balancing and training
    randomness vary per run instead.
    """
    records = binarize_pregnancies(load_pima_csv(cfg.csv))
    full = records_to_dataset(records)
    split = stratified_split(full.y, ratio=cfg.split_ratio, seed=cfg.seed)
    train = full.subset(split.train)
    test = full.subset(split.test)

    imputer = ZeroAsMissingImputer().fit(train.X)
    train = Dataset(imputer.transform(train.X), train.y, train.synthetic_mask)
    test = Dataset(imputer.transform(test.X), test.y, test.synthetic_mask)

    normalizer = make_normalizer(cfg.normalizer).fit(train.X)
    train = Dataset(normalizer.transform(train.X), train.y, train.synthetic_mask)
    test = Dataset(normalizer.transform(test.X), test.y, test.synthetic_mask)
    return PreparedData(
        train=train,
        test=test,
        split_train=split.train,
        split_test=split.test,
        imputer=imputer,
        normalizer=normalizer,
    )


def balance_training_set(train, vae_cfg):
    """Oversample the minority class with a VAE trained on its real rows."""
    zeros, ones = train.class_counts()
    if zeros == ones:
        return train, None
    minority_label = 1.0 if ones < zeros else 0.0
    minority = train.subset(np.flatnonzero(train.y == minority_label))
    model = train_vae(minority, vae_cfg)
    balanced = balance_dataset(train, model, Rng(vae_cfg.seed + 1))
    return balanced, model


@dataclass(frozen=True)
class RunResult:
    """One trained-and-evaluated run of a named configuration."""

    config_name: str
    seed: int
    metrics: object  # RunMetrics
    weights: dict  # tensor name -> float64 array
    history: dict  # phase name -> per-epoch loss list
    wall_seconds: float


def _named_arrays(*models):
    out = {}
    for model in models:
        for name, tensor in model.named_params().items():
            if name in out:
                raise ConfigError(f"duplicate tensor name across models: {name!r}")
            out[name] = tensor.data
    return out


def build_run_model(cfg, name, seed, n_features=8):
    """Fresh, untrained model(s) for a configuration; (kind, models dict)."""
    if name in ("mlp",):
        clf_cfg = replace(cfg.classifier, input_dim=n_features, seed=seed)
        return "separate", {"classifier": build_mlp(clf_cfg)}
    if name in ("sae_mlp", "sae_cnn"):
        sae_cfg = replace(cfg.sae, seed=seed)
        clf_cfg = replace(cfg.classifier, input_dim=cfg.sae.latent_dim, seed=seed)
        sae = SaeModel(sae_cfg, Rng(sae_cfg.seed), n_features=n_features)
        classifier = (
            build_mlp(clf_cfg) if name == "sae_mlp" else build_cnn(clf_cfg)
        )
        return "separate", {"sae": sae, "classifier": classifier}
    if name in ("sae_with_mlp", "sae_with_cnn"):
        head = "cnn" if name == "sae_with_cnn" else "mlp"
        joint_cfg = replace(cfg.joint, head=head, seed=seed)
        return "joint", {"joint": build_joint(joint_cfg)}
    raise ConfigError(
        f"unknown configuration {name!r}; choose from {CONFIGURATION_NAMES}"
    )


def run_configuration(cfg, seed=None, name=None, data=None):
    """Train one configuration end to end and score it on the test split."""
    name = name or cfg.configuration
    seed = cfg.seed if seed is None else seed
    if name not in CONFIGURATION_NAMES:
        raise ConfigError(
            f"unknown configuration {name!r}; choose from {CONFIGURATION_NAMES}"
        )
    start = time.perf_counter()
    data = data or prepare_data(cfg)
    vae_cfg = replace(cfg.vae, seed=seed)
    balanced, vae_model = balance_training_set(data.train, vae_cfg)

    history = {}
    if vae_model is not None:
        history["vae"] = list(vae_model.history["loss"])

    if name == "mlp":
        clf_cfg = replace(cfg.classifier, input_dim=balanced.X.shape[1], seed=seed)
        model = build_mlp(clf_cfg)
        _, clf_history = train_classifier(model, balanced.X, balanced.y, clf_cfg)
        history["classifier"] = list(clf_history)
        _, labels = predict(model, data.test.X)
        weights = _named_arrays(model)
    elif name in ("sae_mlp", "sae_cnn"):
        sae_cfg = replace(cfg.sae, seed=seed)
        sae_model = train_sae(balanced.X, sae_cfg)
        history["sae"] = list(sae_model.history["loss"])
        train_latent = encode_features(sae_model, balanced.X)
        test_latent = encode_features(sae_model, data.test.X)
        clf_cfg = replace(cfg.classifier, input_dim=cfg.sae.latent_dim, seed=seed)
        model = build_mlp(clf_cfg) if name == "sae_mlp" else build_cnn(clf_cfg)
        _, clf_history = train_classifier(model, train_latent, balanced.y, clf_cfg)
        history["classifier"] = list(clf_history)
        _, labels = predict(model, test_latent)
        weights = _named_arrays(sae_model, model)
    else:
        head = "cnn" if name == "sae_with_cnn" else "mlp"
        joint_cfg = replace(cfg.joint, head=head, seed=seed)
        model = build_joint(joint_cfg)
        train_joint(model, balanced.X, balanced.y, joint_cfg)
        history["joint"] = list(model.history["loss"])
        _, labels = joint_predict(model, data.test.X)
        weights = _named_arrays(model)

    metrics = accuracy_and_confusion(labels, data.test.y, config_label=name, seed=seed)
    return RunResult(
        config_name=name,
        seed=seed,
        metrics=metrics,
        weights=weights,
        history=history,
        wall_seconds=time.perf_counter() - start,
    )


def evaluate_weights(cfg, arrays, name=None):
    """Rebuild a configuration's model from saved arrays and score it."""
    name = name or cfg.configuration
    data = prepare_data(cfg)
    kind, models = build_run_model(cfg, name, cfg.seed, data.train.X.shape[1])
    expected = _named_arrays(*models.values())
    missing = sorted(set(expected) - set(arrays))
    extra = sorted(set(arrays) - set(expected))
    if missing or extra:
        raise DataError(
            f"weight manifest does not match configuration {name!r}: "
            f"missing {missing}, unexpected {extra}"
        )
    for model in models.values():
        for tensor_name, tensor in model.named_params().items():
            loaded = arrays[tensor_name]
            if tuple(loaded.shape) != tuple(tensor.data.shape):
                raise DataError(
                    f"shape mismatch for {tensor_name!r}: container has "
                    f"{tuple(loaded.shape)}, model needs {tuple(tensor.data.shape)}"
                )
            tensor.data[...] = loaded

    if kind == "joint":
        _, labels = joint_predict(models["joint"], data.test.X)
    elif "sae" in models:
        test_latent = encode_features(models["sae"], data.test.X)
        _, labels = predict(models["classifier"], test_latent)
    else:
        _, labels = predict(models["classifier"], data.test.X)
    return accuracy_and_confusion(
        labels, data.test.y, config_label=name, seed=cfg.seed
    )


def metrics_record(result):
    """One JSON-serializable metrics object for a finished run."""
    m = result.metrics
    return {
        "config": result.config_name,
        "seed": result.seed,
        "accuracy": m.accuracy,
        "tp": m.tp,
        "tn": m.tn,
        "fp": m.fp,
        "fn": m.fn,
        "loss_summary": {
            phase: {
                "epochs": len(losses),
                "first": losses[0],
                "last": losses[-1],
            }
            for phase, losses in result.history.items()
            if losses
        },
        "wall_seconds": result.wall_seconds,
    }


def experiment_plan(global_seed, repeats):
    """(config name, seed) pairs; sae_with_cnn gets one extra run.

    With the default repeats=11 this yields the 11/11/11/11/12 = 56-run
    scheme whose ANOVA degrees of freedom are (4, 51).
    """
    if repeats < 2:
        raise ConfigError(f"experiment needs repeats >= 2, got {repeats}")
    plan = []
    run_index = 0
    for name in CONFIGURATION_NAMES:
        count = repeats + (1 if name == "sae_with_cnn" else 0)
        for _ in range(count):
            plan.append((name, global_seed + run_index * SEED_STRIDE))
            run_index += 1
    return plan


@dataclass(frozen=True)
class ExperimentReport:
    groups: tuple  # RunGroup per configuration, in CONFIGURATION_NAMES order
    anova: object  # AnovaResult
    tukey: tuple  # PairwiseComparison
    metrics: tuple  # RunMetrics for every surviving run
    failures: tuple  # (config name, seed, error string)


def run_experiment(cfg, repeats=11, runner=None, data=None):
    """All five configurations x repeats; ANOVA + Tukey across groups.

    ``runner(cfg, name, seed)`` must return a RunMetrics; the default
    trains for real. Failed runs are recorded, warned about, and
    excluded; ANOVA proceeds only if every group keeps >= 2 survivors.
    """
    if runner is None:
        shared = data or prepare_data(cfg)

        def runner(cfg, name, seed):
            return run_configuration(cfg, seed, name, data=shared).metrics

    survivors = {name: [] for name in CONFIGURATION_NAMES}
    metrics = []
    failures = []
    for name, seed in experiment_plan(cfg.seed, repeats):
        try:
            result = runner(cfg, name, seed)
        except Exception as exc:  # noqa: BLE001 - any failure is recorded
            warnings.warn(f"run {name!r} seed {seed} failed: {exc}", stacklevel=2)
            failures.append((name, seed, str(exc)))
            continue
        survivors[name].append(result)
        metrics.append(result)

    groups = tuple(
        RunGroup(name, tuple(m.accuracy for m in survivors[name]))
        for name in CONFIGURATION_NAMES
    )
    anova = one_way_anova(groups)
    tukey = tuple(tukey_hsd(groups))
    return ExperimentReport(
        groups=groups,
        anova=anova,
        tukey=tukey,
        metrics=tuple(metrics),
        failures=tuple(failures),
    )


def report_to_dict(report):
    """JSON-ready view of an experiment report."""
    return {
        "groups": {
            g.label: {
                "n": len(g.values),
                "mean": report.anova.group_means[g.label],
                "sd": report.anova.group_sds[g.label],
                "values": list(g.values),
            }
            for g in report.groups
        },
        "anova": {
            "F": report.anova.F,
            "df_between": report.anova.df_between,
            "df_within": report.anova.df_within,
            "p": report.anova.p,
        },
        "tukey": [
            {
                "a": c.label_a,
                "b": c.label_b,
                "mean_difference": c.mean_difference,
                "threshold": c.threshold,
                "significant": c.significant,
            }
            for c in report.tukey
        ],
        "failures": [
            {"config": name, "seed": seed, "error": error}
            for name, seed, error in report.failures
        ],
    }


def format_report(report):
    """Aligned text table: per-group mean/SD, ANOVA line, Tukey pairs."""
    lines = []
    lines.append(f"{'configuration':<14} {'n':>3} {'mean':>8} {'sd':>8}")
    for g in report.groups:
        lines.append(
            f"{g.label:<14} {len(g.values):>3} "
            f"{report.anova.group_means[g.label]:>8.4f} "
            f"{report.anova.group_sds[g.label]:>8.4f}"
        )
    a = report.anova
    lines.append(
        f"ANOVA: F({a.df_between}, {a.df_within}) = {a.F:.3f}, p = {a.p:.6f}"
    )
    lines.append(f"{'pair':<30} {'diff':>9} {'threshold':>10}  significant")
    for c in report.tukey:
        pair = f"{c.label_a} vs {c.label_b}"
        flag = "yes" if c.significant else "no"
        lines.append(
            f"{pair:<30} {c.mean_difference:>9.4f} {c.threshold:>10.4f}  {flag}"
        )
    if report.failures:
        lines.append(f"excluded failed runs: {len(report.failures)}")
        for name, seed, error in report.failures:
            lines.append(f"  {name} seed {seed}: {error}")
    return "\n".join(lines)
