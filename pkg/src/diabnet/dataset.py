"""Loading and basic shaping of the Pima Indians Diabetes table.

The expected file is the classic UCI layout: nine comma-separated numeric
columns (Pregnancies, Glucose, BloodPressure, SkinThickness, Insulin, BMI,
DiabetesPedigreeFunction, Age, Outcome), optional header row, UTF-8.
"""

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DataError

FEATURE_NAMES = (
    "pregnancies",
    "glucose",
    "blood_pressure",
    "skin_thickness",
    "insulin",
    "bmi",
    "diabetes_pedigree",
    "age",
)

#: Columns where a literal 0 is physiologically impossible and therefore
#: denotes a missing measurement. Pregnancies, pedigree, and age are exempt.
IMPUTABLE_COLUMNS = ("glucose", "blood_pressure", "skin_thickness", "insulin", "bmi")


@dataclass(frozen=True)
class RawRecord:
    """One row of the source table, unprocessed."""

    pregnancies: float
    glucose: float
    blood_pressure: float
    skin_thickness: float
    insulin: float
    bmi: float
    diabetes_pedigree: float
    age: float
    label: int

    def features(self):
        return tuple(getattr(self, name) for name in FEATURE_NAMES)


@dataclass
class Dataset:
    """Feature matrix plus labels plus per-row provenance flags.

    ``synthetic_mask[i]`` is True only for rows appended by an oversampler;
    rows read from disk are always real.
    """

    X: np.ndarray
    y: np.ndarray
    synthetic_mask: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        self.synthetic_mask = np.asarray(self.synthetic_mask, dtype=bool).ravel()
        n = self.X.shape[0]
        if not (self.y.shape[0] == n and self.synthetic_mask.shape[0] == n):
            raise DataError(
                "X, y, and synthetic_mask must have equal row counts: "
                f"{n}, {self.y.shape[0]}, {self.synthetic_mask.shape[0]}"
            )
        if self.y.size and not np.all(np.isin(self.y, (0.0, 1.0))):
            raise DataError("labels must be 0 or 1")

    @property
    def n_rows(self):
        return self.X.shape[0]

    def class_counts(self):
        """(count of label 0, count of label 1)."""
        ones = int(np.sum(self.y == 1.0))
        return self.n_rows - ones, ones

    def subset(self, indices):
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.synthetic_mask[idx])

    def copy(self):
        return Dataset(self.X.copy(), self.y.copy(), self.synthetic_mask.copy())


def _parse_row(cells, row_number):
    if len(cells) != 9:
        raise DataError(
            f"row {row_number}: expected 9 columns, got {len(cells)}"
        )
    values = []
    for col, cell in enumerate(cells):
        try:
            values.append(float(cell))
        except ValueError:
            raise DataError(
                f"row {row_number}, column {col + 1}: "
                f"cannot parse {cell.strip()!r} as a number"
            ) from None
        if not np.isfinite(values[-1]):
            raise DataError(
                f"row {row_number}, column {col + 1}: non-finite value"
            )
    label = values[8]
    if label not in (0.0, 1.0):
        raise DataError(f"row {row_number}, column 9: label must be 0 or 1")
    return RawRecord(*values[:8], label=int(label))


def load_pima_csv(path):
    """Read the diabetes table, returning rows in file order.

    A header row is detected automatically: if the first row has any cell
    that does not parse as a number, it is treated as a header and skipped.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows:
        raise DataError(f"{path}: file is empty")

    def row_is_numeric(cells):
        try:
            for cell in cells:
                float(cell)
        except ValueError:
            return False
        return True

    start = 0 if row_is_numeric(rows[0]) else 1
    if start == 1 and len(rows) == 1:
        raise DataError(f"{path}: file contains only a header row")
    return [
        _parse_row(row, row_number)
        for row_number, row in enumerate(rows[start:], start=start + 1)
    ]


def binarize_pregnancies(records):
    """Collapse the pregnancy count to a has-been-pregnant indicator.

    Idempotent: values already in {0, 1} map to themselves.
    """
    return [
        dataclasses.replace(r, pregnancies=1.0 if r.pregnancies > 0 else 0.0)
        for r in records
    ]


def records_to_dataset(records):
    """Stack records into a Dataset; every row is flagged as real."""
    if not records:
        return Dataset(
            np.empty((0, 8)), np.empty((0,)), np.empty((0,), dtype=bool)
        )
    X = np.array([r.features() for r in records], dtype=np.float64)
    y = np.array([r.label for r in records], dtype=np.float64)
    return Dataset(X, y, np.zeros(len(records), dtype=bool))
