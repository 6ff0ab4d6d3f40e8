import csv
import json
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def activity_table():
    with open(DATA / "published_activity_table.csv", newline="") as fh:
        return [
            {k: (int(v) if k == "row" else float(v)) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


@pytest.fixture
def published_model_path():
    return lambda method: DATA / f"published_{method.lower()}_model.json"


def write_csvs(tmp_path, ds, activity_col="pic50"):
    """Write ``ds`` as activity/descriptor CSV files and return their paths."""
    act = tmp_path / "activity.csv"
    desc = tmp_path / "descriptors.csv"
    with open(act, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", activity_col])
        for cid, y in zip(ds.ids, ds.activity):
            w.writerow([cid, repr(float(y)) if activity_col == "pic50" else repr(10 ** (6 - float(y)))])
    with open(desc, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *ds.names])
        for cid, row in zip(ds.ids, ds.X):
            w.writerow([cid, *map(repr, map(float, row))])
    return act, desc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
