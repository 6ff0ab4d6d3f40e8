"""Activity and descriptor table loading.

Activity values arrive either as IC50 in micromolar or directly as pIC50.
Descriptors arrive as a precomputed numeric matrix keyed by compound id;
nothing here knows about molecular structure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, IngestError

#: Maximum allowed disagreement between a supplied pIC50 and the one derived from IC50.
PIC50_CONSISTENCY_TOL = 0.005


def compute_pic50(ic50: float) -> float:
    """Convert an IC50 in micromolar to pIC50 = -log10(IC50 * 1e-6)."""
    ic50 = float(ic50)
    if not math.isfinite(ic50) or ic50 <= 0:
        raise DomainError(f"IC50 must be a positive finite concentration, got {ic50!r}")
    return -math.log10(ic50 * 1e-6)


def residual(observed: float, predicted: float) -> float:
    """Signed residual ``observed - predicted``. Tables print its magnitude."""
    return observed - predicted


@dataclass(frozen=True)
class CompoundRecord:
    id: str
    pic50: float
    ic50: float | None = None

    def __post_init__(self):
        if not self.id:
            raise IngestError("compound id must be a non-empty string")
        if self.ic50 is not None:
            if not self.ic50 > 0:
                raise DomainError(f"compound {self.id!r}: IC50 must be > 0, got {self.ic50}")
            derived = compute_pic50(self.ic50)
            if abs(derived - self.pic50) > PIC50_CONSISTENCY_TOL:
                raise IngestError(
                    f"compound {self.id!r}: pic50 {self.pic50} inconsistent with "
                    f"ic50 {self.ic50} (expected {derived:.4f})"
                )

    @classmethod
    def from_ic50(cls, id: str, ic50: float) -> "CompoundRecord":
        return cls(id=id, pic50=compute_pic50(ic50), ic50=float(ic50))


@dataclass(frozen=True)
class DescriptorMatrix:
    """Named descriptor columns over compound rows.

    ``history`` records each preprocessing step applied, oldest first.
    """

    compound_ids: tuple[str, ...]
    descriptor_names: tuple[str, ...]
    values: np.ndarray
    history: tuple[dict, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise IngestError(f"descriptor values must be 2-D, got shape {values.shape}")
        object.__setattr__(self, "compound_ids", tuple(str(i) for i in self.compound_ids))
        object.__setattr__(self, "descriptor_names", tuple(str(n) for n in self.descriptor_names))
        if values.shape != (len(self.compound_ids), len(self.descriptor_names)):
            raise IngestError(
                f"value matrix shape {values.shape} does not match "
                f"{len(self.compound_ids)} ids x {len(self.descriptor_names)} names"
            )
        _require_unique(self.compound_ids, "compound id")
        _require_unique(self.descriptor_names, "descriptor name")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise IngestError(
                f"non-finite value at compound {self.compound_ids[r]!r}, "
                f"descriptor {self.descriptor_names[c]!r}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "history", tuple(self.history))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column_index(self, names: Iterable[str]) -> list[int]:
        lookup = {n: i for i, n in enumerate(self.descriptor_names)}
        missing = [n for n in names if n not in lookup]
        if missing:
            raise KeyError(f"unknown descriptor(s): {', '.join(missing)}")
        return [lookup[n] for n in names]

    def columns(self, names: Sequence[str]) -> np.ndarray:
        """Return the value sub-matrix for ``names`` in the given order."""
        return self.values[:, self.column_index(names)]

    def select_columns(self, names: Sequence[str], step: dict | None = None) -> "DescriptorMatrix":
        history = self.history + ((step,) if step else ())
        return DescriptorMatrix(self.compound_ids, tuple(names), self.columns(names), history)

    def take_rows(self, ids: Sequence[str]) -> "DescriptorMatrix":
        lookup = {c: i for i, c in enumerate(self.compound_ids)}
        try:
            rows = [lookup[i] for i in ids]
        except KeyError as exc:
            raise IngestError(f"unknown compound id {exc.args[0]!r}") from None
        return DescriptorMatrix(tuple(ids), self.descriptor_names, self.values[rows], self.history)


@dataclass(frozen=True)
class Dataset:
    """A descriptor matrix joined with its pIC50 response."""

    matrix: DescriptorMatrix
    activity: np.ndarray

    def __post_init__(self):
        activity = np.array(self.activity, dtype=np.float64, copy=True).ravel()
        if activity.shape[0] != self.matrix.shape[0]:
            raise IngestError(
                f"activity length {activity.shape[0]} != matrix rows {self.matrix.shape[0]}"
            )
        if not np.all(np.isfinite(activity)):
            raise IngestError("activity contains non-finite values")
        activity.setflags(write=False)
        object.__setattr__(self, "activity", activity)

    @property
    def ids(self) -> tuple[str, ...]:
        return self.matrix.compound_ids

    @property
    def names(self) -> tuple[str, ...]:
        return self.matrix.descriptor_names

    @property
    def X(self) -> np.ndarray:
        return self.matrix.values

    @property
    def y(self) -> np.ndarray:
        return self.activity

    def __len__(self):
        return len(self.ids)

    def subset(self, ids: Sequence[str]) -> "Dataset":
        lookup = {c: i for i, c in enumerate(self.ids)}
        rows = [lookup[i] for i in ids]
        return Dataset(self.matrix.take_rows(ids), self.activity[rows])

    def with_matrix(self, matrix: DescriptorMatrix) -> "Dataset":
        if matrix.compound_ids != self.ids:
            raise IngestError("replacement matrix rows are not aligned with the dataset")
        return Dataset(matrix, self.activity)

    def with_activity(self, activity: np.ndarray) -> "Dataset":
        return Dataset(self.matrix, activity)

    @classmethod
    def from_arrays(cls, X, y, names=None, ids=None) -> "Dataset":
        """Build a dataset from plain arrays, generating ids/names when absent."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        n, p = X.shape
        names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(p))
        ids = tuple(ids) if ids is not None else tuple(f"c{i + 1:03d}" for i in range(n))
        return cls(DescriptorMatrix(ids, names, X), y)


def _require_unique(items: Sequence[str], what: str) -> None:
    seen = set()
    for item in items:
        if item in seen:
            raise IngestError(f"duplicate {what} {item!r}")
        seen.add(item)


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise IngestError(f"non-numeric cell {text!r} at {where}") from None
    if not math.isfinite(value):
        raise IngestError(f"non-finite cell {text!r} at {where}")
    return value


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    if not rows:
        raise IngestError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "id":
        raise IngestError(f"{path}: first column must be 'id', got {header[:1]}")
    body = rows[1:]
    if not body:
        raise IngestError(f"{path}: no data rows")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise IngestError(
                f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}"
            )
    return header, body


def load_activity(path, abs_ic50: bool = False) -> list[CompoundRecord]:
    """Read an activity CSV with columns ``id`` and ``ic50`` and/or ``pic50``.

    Negative IC50 cells are rejected unless ``abs_ic50`` is set, in which case
    their magnitude is used.
    """
    path = Path(path)
    header, body = _read_rows(path)
    cols = {h.lower(): i for i, h in enumerate(header)}
    if "ic50" not in cols and "pic50" not in cols:
        raise IngestError(f"{path}: activity file needs an 'ic50' or 'pic50' column")
    records = []
    seen = set()
    for lineno, row in enumerate(body, start=2):
        cid = row[0].strip()
        if not cid:
            raise IngestError(f"{path}: empty id on line {lineno}")
        if cid in seen:
            raise IngestError(f"{path}: duplicate id {cid!r} on line {lineno}")
        seen.add(cid)
        ic50 = pic50 = None
        if "ic50" in cols and row[cols["ic50"]].strip():
            ic50 = _parse_float(row[cols["ic50"]], f"{path} line {lineno}, column 'ic50'")
            if abs_ic50:
                ic50 = abs(ic50)
            if ic50 <= 0:
                raise IngestError(
                    f"{path} line {lineno}, column 'ic50': IC50 {ic50} for {cid!r} is not "
                    "positive (use abs_ic50 to take magnitudes)"
                )
        if "pic50" in cols and row[cols["pic50"]].strip():
            pic50 = _parse_float(row[cols["pic50"]], f"{path} line {lineno}, column 'pic50'")
        if pic50 is None and ic50 is None:
            raise IngestError(f"{path} line {lineno}: no activity value for {cid!r}")
        if pic50 is None:
            pic50 = compute_pic50(ic50)
        records.append(CompoundRecord(id=cid, pic50=pic50, ic50=ic50))
    return records


def load_descriptors(path) -> DescriptorMatrix:
    path = Path(path)
    header, body = _read_rows(path)
    names = header[1:]
    if not names:
        raise IngestError(f"{path}: no descriptor columns")
    ids = []
    values = np.empty((len(body), len(names)))
    for r, row in enumerate(body):
        lineno = r + 2
        ids.append(row[0].strip())
        for c, cell in enumerate(row[1:]):
            values[r, c] = _parse_float(cell, f"{path} line {lineno}, column {names[c]!r}")
    try:
        return DescriptorMatrix(tuple(ids), tuple(names), values, ({"step": "load", "source": path.name},))
    except IngestError as exc:
        raise IngestError(f"{path}: {exc}") from None


def join(records: Sequence[CompoundRecord], matrix: DescriptorMatrix) -> Dataset:
    """Join activity records to descriptor rows by id, in activity order."""
    activity_ids = [r.id for r in records]
    known = set(matrix.compound_ids)
    missing = [i for i in activity_ids if i not in known]
    if missing:
        raise IngestError(f"id(s) missing from descriptor file: {', '.join(missing)}")
    extra = sorted(known - set(activity_ids))
    if extra:
        raise IngestError(f"id(s) missing from activity file: {', '.join(extra)}")
    return Dataset(matrix.take_rows(activity_ids), [r.pic50 for r in records])


def load_dataset(activity_path, descriptor_path, abs_ic50: bool = False) -> Dataset:
    records = load_activity(activity_path, abs_ic50=abs_ic50)
    matrix = load_descriptors(descriptor_path)
    return join(records, matrix)


def write_dataset(ds: Dataset, activity_path, descriptor_path) -> None:
    """Write ``ds`` back out as an ``id,pic50`` file and a descriptor file."""
    with open(activity_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "pic50"])
        for cid, y in zip(ds.ids, ds.activity):
            w.writerow([cid, repr(float(y))])
    write_descriptors(ds.matrix, descriptor_path)


def write_descriptors(matrix: DescriptorMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *matrix.descriptor_names])
        for cid, row in zip(matrix.compound_ids, matrix.values):
            w.writerow([cid, *(repr(float(v)) for v in row)])

