"""Shared fixtures: locate the diabetes CSV the suite should run against.

Preference order:
1. ``DIABNET_PIMA_CSV`` environment variable (point this at the original
   UCI file to run the suite against the real data),
2. ``data/pima.csv`` in the repository root (drop-in location for the
   original file),
3. ``data/pima_surrogate.csv`` — the deterministic surrogate shipped with
   the repository (regenerated on the fly if missing).
"""

import os
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def pima_csv_path(tmp_path_factory):
    env = os.environ.get("DIABNET_PIMA_CSV")
    candidates = [Path(env)] if env else []
    candidates += [
        REPO_ROOT / "data" / "pima.csv",
        REPO_ROOT / "data" / "pima_surrogate.csv",
    ]
    for path in candidates:
        if path.is_file():
            return path
    from diabnet.surrogate import write_surrogate_csv

    generated = tmp_path_factory.mktemp("data") / "pima_surrogate.csv"
    write_surrogate_csv(generated)
    return generated


@pytest.fixture(scope="session")
def pima_records(pima_csv_path):
    from diabnet.dataset import load_pima_csv

    return load_pima_csv(pima_csv_path)
