"""Run metrics and cross-configuration statistics.

One-way ANOVA with an exact F-distribution p-value (regularized
incomplete beta evaluated by continued fraction — no statistics library
is assumed at runtime) and Tukey's HSD with the Tukey–Kramer adjustment
for unequal group sizes, using studentized-range critical values
transcribed from standard published tables.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class RunMetrics:
    """Held-out evaluation of one trained run."""

    accuracy: float
    tp: int
    tn: int
    fp: int
    fn: int
    config_label: str = ""
    seed: int = 0

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


def accuracy_and_confusion(predicted, actual, config_label="", seed=0):
    predicted = np.asarray(predicted, dtype=np.float64).ravel()
    actual = np.asarray(actual, dtype=np.float64).ravel()
    if predicted.shape[0] != actual.shape[0]:
        raise DataError(
            f"prediction/label length mismatch: "
            f"{predicted.shape[0]} vs {actual.shape[0]}"
        )
    for name, values in (("predictions", predicted), ("labels", actual)):
        if values.size and not np.all(np.isin(values, (0.0, 1.0))):
            raise DataError(f"{name} must be binary 0/1")
    tp = int(np.sum((predicted == 1.0) & (actual == 1.0)))
    tn = int(np.sum((predicted == 0.0) & (actual == 0.0)))
    fp = int(np.sum((predicted == 1.0) & (actual == 0.0)))
    fn = int(np.sum((predicted == 0.0) & (actual == 1.0)))
    total = predicted.shape[0]
    if total == 0:
        raise DataError("cannot score an empty prediction set")
    return RunMetrics(
        accuracy=(tp + tn) / total,
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        config_label=config_label,
        seed=seed,
    )


@dataclass(frozen=True)
class RunGroup:
    """Accuracy values for one configuration across seeds/repeats."""

    label: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class AnovaResult:
    F: float
    df_between: int
    df_within: int
    p: float
    group_means: dict = field(default_factory=dict)
    group_sds: dict = field(default_factory=dict)


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iterations = 300
    eps = 3e-15
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        numer = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numer * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numer / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        numer = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numer * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numer / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ConfigError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a, b, x):
    """I_x(a, b), accurate to ~1e-14 for moderate a, b."""
    if a <= 0.0 or b <= 0.0:
        raise ConfigError("incomplete beta requires a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ConfigError(f"incomplete beta requires x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the continued fraction on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_survival(f_value, df1, df2):
    """P(F > f_value) for the F distribution with (df1, df2) dofs."""
    if f_value < 0.0:
        raise ConfigError("F statistic must be non-negative")
    if f_value == math.inf:
        return 0.0
    x = df2 / (df2 + df1 * f_value)
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x)


def one_way_anova(groups):
    if len(groups) < 2:
        raise DataError("ANOVA requires at least 2 groups")
    arrays = []
    for group in groups:
        values = np.asarray(group.values, dtype=np.float64)
        if values.size < 2:
            raise DataError(
                f"group {group.label!r} needs at least 2 values, "
                f"got {values.size}"
            )
        arrays.append(values)

    pooled = np.concatenate(arrays)
    if np.all(pooled == pooled[0]):
        raise DataError("ANOVA is degenerate: every value is identical")

    k = len(arrays)
    n_total = pooled.size
    grand_mean = pooled.mean()
    ss_between = sum(
        values.size * (values.mean() - grand_mean) ** 2 for values in arrays
    )
    ss_within = sum(
        float(np.sum((values - values.mean()) ** 2)) for values in arrays
    )
    df_between = k - 1
    df_within = n_total - k

    means = {g.label: float(np.mean(g.values)) for g in groups}
    sds = {g.label: float(np.std(g.values, ddof=1)) for g in groups}

    if ss_within == 0.0:
        return AnovaResult(
            F=math.inf,
            df_between=df_between,
            df_within=df_within,
            p=0.0,
            group_means=means,
            group_sds=sds,
        )
    f_value = (ss_between / df_between) / (ss_within / df_within)
    p = f_survival(f_value, df_between, df_within)
    return AnovaResult(
        F=float(f_value),
        df_between=df_between,
        df_within=df_within,
        p=float(min(max(p, 0.0), 1.0)),
        group_means=means,
        group_sds=sds,
    )


#: Studentized-range critical values q(alpha=0.05; k, df), transcribed from
#: standard published tables. Rows are df (math.inf keys the asymptotic
#: row); columns are k = 2..6 group counts.
_Q_TABLE_ALPHA = 0.05
_Q_TABLE_KS = (2, 3, 4, 5, 6)
_Q_TABLE = {
    2: (6.085, 8.331, 9.798, 10.881, 11.734),
    3: (4.501, 5.910, 6.825, 7.502, 8.037),
    4: (3.927, 5.040, 5.757, 6.287, 6.707),
    5: (3.635, 4.602, 5.218, 5.673, 6.033),
    6: (3.461, 4.339, 4.896, 5.305, 5.628),
    7: (3.344, 4.165, 4.681, 5.060, 5.359),
    8: (3.261, 4.041, 4.529, 4.886, 5.167),
    9: (3.199, 3.949, 4.415, 4.756, 5.024),
    10: (3.151, 3.877, 4.327, 4.654, 4.912),
    20: (2.950, 3.578, 3.958, 4.232, 4.445),
    30: (2.888, 3.486, 3.845, 4.102, 4.302),
    40: (2.858, 3.442, 3.791, 4.039, 4.232),
    60: (2.829, 3.399, 3.737, 3.977, 4.163),
    120: (2.800, 3.356, 3.685, 3.917, 4.096),
    math.inf: (2.772, 3.314, 3.633, 3.858, 4.030),
}


def studentized_range_critical(k, df, alpha=0.05):
    """q(alpha; k, df) by linear interpolation in 1/df over the table."""
    if alpha != _Q_TABLE_ALPHA:
        raise ConfigError(
            f"only alpha={_Q_TABLE_ALPHA} is supported by the embedded "
            f"studentized-range table, got {alpha}"
        )
    if k not in _Q_TABLE_KS:
        raise ConfigError(
            f"studentized-range table covers k in {_Q_TABLE_KS}, got {k}"
        )
    if df < min(d for d in _Q_TABLE if d is not math.inf):
        raise ConfigError(
            f"studentized-range table requires df_within >= 2, got {df}"
        )
    column = _Q_TABLE_KS.index(k)
    # Interpolate linearly in 1/df; 1/inf = 0 anchors the asymptotic row.
    points = sorted(
        ((0.0 if d is math.inf else 1.0 / d), row[column])
        for d, row in _Q_TABLE.items()
    )
    target = 0.0 if df is math.inf else 1.0 / df
    xs = [p[0] for p in points]
    qs = [p[1] for p in points]
    return float(np.interp(target, xs, qs))


@dataclass(frozen=True)
class PairwiseComparison:
    label_a: str
    label_b: str
    mean_difference: float
    threshold: float
    significant: bool


def tukey_hsd(groups, alpha=0.05):
    """All-pairs Tukey HSD; Tukey–Kramer threshold for unequal sizes."""
    anova = one_way_anova(groups)
    arrays = {g.label: np.asarray(g.values, dtype=np.float64) for g in groups}
    ss_within = sum(
        float(np.sum((v - v.mean()) ** 2)) for v in arrays.values()
    )
    if ss_within == 0.0:
        raise DataError("Tukey HSD is undefined with zero within-group variance")
    ms_within = ss_within / anova.df_within
    q_critical = studentized_range_critical(len(groups), anova.df_within, alpha)

    comparisons = []
    labels = [g.label for g in groups]
    for i, label_a in enumerate(labels):
        for label_b in labels[i + 1 :]:
            a, b = arrays[label_a], arrays[label_b]
            difference = float(a.mean() - b.mean())
            threshold = q_critical * math.sqrt(
                ms_within / 2.0 * (1.0 / a.size + 1.0 / b.size)
            )
            comparisons.append(
                PairwiseComparison(
                    label_a=label_a,
                    label_b=label_b,
                    mean_difference=difference,
                    threshold=float(threshold),
                    significant=abs(difference) > threshold,
                )
            )
    return comparisons
