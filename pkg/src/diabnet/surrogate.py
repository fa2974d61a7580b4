"""Deterministic surrogate for the Pima Indians Diabetes table.

The canonical UCI file cannot always be redistributed alongside source
code, so this module synthesizes a stand-in with the same structural
contract: 768 rows, 500 negative / 268 positive labels, the same column
order and formatting, a realistic missingness profile (literal zeros in
the five physiological columns), and class-conditional feature shifts
strong enough that a reasonable classifier clears the majority-vote
baseline. Every draw comes from one fixed-seed generator, so the emitted
file is byte-identical across runs and platforms.

Tests and example commands fall back to this surrogate when the real
file is absent; see README for how to point the suite at the original.
"""

import argparse

import numpy as np

from .dataset import RawRecord

SURROGATE_SEED = 773
N_NEGATIVE = 500
N_POSITIVE = 268

#: Number of rows per column that carry a literal 0 in place of a missing
#: measurement, mirroring the well-known profile of the original table.
ZERO_COUNTS = {
    "glucose": 5,
    "blood_pressure": 35,
    "skin_thickness": 227,
    "insulin": 374,
    "bmi": 11,
}

HEADER = (
    "Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,"
    "DiabetesPedigreeFunction,Age,Outcome"
)


def _column(rng, n_neg, n_pos, neg_params, pos_params, lo, hi, lognormal=False):
    """Draw a class-conditional column, negatives first, clipped to [lo, hi]."""
    if lognormal:
        neg = np.exp(rng.normal(np.log(neg_params[0]), neg_params[1], size=n_neg))
        pos = np.exp(rng.normal(np.log(pos_params[0]), pos_params[1], size=n_pos))
    else:
        neg = rng.normal(neg_params[0], neg_params[1], size=n_neg)
        pos = rng.normal(pos_params[0], pos_params[1], size=n_pos)
    return np.clip(np.concatenate([neg, pos]), lo, hi)


def make_surrogate_records(seed=SURROGATE_SEED):
    """Build the surrogate rows (fixed order for a fixed seed)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n_neg, n_pos = N_NEGATIVE, N_POSITIVE
    n = n_neg + n_pos

    pregnancies = np.concatenate(
        [rng.poisson(3.2, size=n_neg), rng.poisson(4.7, size=n_pos)]
    ).astype(float)
    glucose = np.round(
        _column(rng, n_neg, n_pos, (110.5, 24.5), (141.5, 30.5), 56, 199)
    )
    blood_pressure = np.round(
        _column(rng, n_neg, n_pos, (70.9, 12.2), (75.3, 12.5), 24, 122)
    )
    skin_thickness = np.round(
        _column(rng, n_neg, n_pos, (27.2, 9.8), (33.0, 10.4), 7, 63)
    )
    insulin = np.round(
        _column(rng, n_neg, n_pos, (110.0, 0.55), (175.0, 0.60), 14, 846, True)
    )
    bmi = np.round(
        _column(rng, n_neg, n_pos, (30.9, 6.4), (35.4, 6.6), 18.2, 67.1), 1
    )
    pedigree = np.round(
        _column(rng, n_neg, n_pos, (0.36, 0.55), (0.45, 0.55), 0.078, 2.42), 3
    )
    age = np.clip(
        21 + np.floor(
            np.concatenate(
                [rng.exponential(10.5, size=n_neg), rng.exponential(16.0, size=n_pos)]
            )
        ),
        21,
        81,
    )

    columns = {
        "pregnancies": pregnancies,
        "glucose": glucose,
        "blood_pressure": blood_pressure,
        "skin_thickness": skin_thickness,
        "insulin": insulin,
        "bmi": bmi,
        "diabetes_pedigree": pedigree,
        "age": age,
    }
    for name, count in ZERO_COUNTS.items():
        rows = rng.choice(n, size=count, replace=False)
        columns[name][rows] = 0.0

    labels = np.concatenate([np.zeros(n_neg, dtype=int), np.ones(n_pos, dtype=int)])
    order = rng.permutation(n)
    return [
        RawRecord(
            pregnancies=columns["pregnancies"][i],
            glucose=columns["glucose"][i],
            blood_pressure=columns["blood_pressure"][i],
            skin_thickness=columns["skin_thickness"][i],
            insulin=columns["insulin"][i],
            bmi=columns["bmi"][i],
            diabetes_pedigree=columns["diabetes_pedigree"][i],
            age=columns["age"][i],
            label=int(labels[i]),
        )
        for i in order
    ]


def format_record(record):
    """Render one row with the original file's column formatting."""
    return (
        f"{record.pregnancies:.0f},{record.glucose:.0f},"
        f"{record.blood_pressure:.0f},{record.skin_thickness:.0f},"
        f"{record.insulin:.0f},{record.bmi:.1f},"
        f"{record.diabetes_pedigree:.3f},{record.age:.0f},{record.label:d}"
    )


def write_surrogate_csv(path, seed=SURROGATE_SEED):
    records = make_surrogate_records(seed)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(HEADER + "\n")
        for record in records:
            handle.write(format_record(record) + "\n")
    return path


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Write the deterministic surrogate diabetes CSV."
    )
    parser.add_argument("path", help="output CSV path")
    parser.add_argument("--seed", type=int, default=SURROGATE_SEED)
    args = parser.parse_args(argv)
    write_surrogate_csv(args.path, args.seed)
    print(f"wrote {args.path}")


if __name__ == "__main__":
    main()
