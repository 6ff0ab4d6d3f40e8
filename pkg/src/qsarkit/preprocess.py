"""Descriptor reduction (constant and cross-correlated columns) and standardization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data_ingest import DescriptorMatrix
from .errors import PreprocessError

DEFAULT_CONSTANT_TOL = 1e-8
DEFAULT_CORRELATION_THRESHOLD = 0.99


@dataclass(frozen=True)
class PreprocessReport:
    removed_constant: tuple[str, ...] = ()
    # (dropped, kept, r)
    removed_correlated: tuple[tuple[str, str, float], ...] = ()
    kept: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "removed_constant": list(self.removed_constant),
            "removed_correlated": [[d, k, float(r)] for d, k, r in self.removed_correlated],
            "kept": list(self.kept),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "PreprocessReport":
        return cls(
            tuple(data["removed_constant"]),
            tuple((d, k, float(r)) for d, k, r in data["removed_correlated"]),
            tuple(data["kept"]),
        )

    def merge(self, later: "PreprocessReport") -> "PreprocessReport":
        """Combine with a report produced by a subsequent step."""
        return PreprocessReport(
            self.removed_constant + later.removed_constant,
            self.removed_correlated + later.removed_correlated,
            later.kept,
        )


@dataclass(frozen=True)
class Standardization:
    """Per-descriptor training means and sample (n-1) standard deviations."""

    names: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "means", np.asarray(self.means, dtype=np.float64))
        object.__setattr__(self, "sds", np.asarray(self.sds, dtype=np.float64))

    @classmethod
    def fit(cls, X: np.ndarray, names=None) -> "Standardization":
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise PreprocessError("standardization needs at least two rows")
        names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(X.shape[1]))
        return cls(names, X.mean(axis=0), X.std(axis=0, ddof=1))

    def transform(self, X: np.ndarray) -> np.ndarray:
        if np.any(self.sds <= 0):
            bad = [n for n, s in zip(self.names, self.sds) if s <= 0]
            raise PreprocessError(f"constant column(s) cannot be standardized: {', '.join(bad)}")
        return (np.asarray(X, dtype=np.float64) - self.means) / self.sds

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "sds": self.sds.tolist()}


def _sample_sd(values: np.ndarray) -> np.ndarray:
    if values.shape[0] < 2:
        raise PreprocessError("at least two compounds are needed to judge column variance")
    return values.std(axis=0, ddof=1)


def remove_constant_columns(
    m: DescriptorMatrix, tol: float = DEFAULT_CONSTANT_TOL
) -> tuple[DescriptorMatrix, PreprocessReport]:
    """Drop columns whose sample standard deviation is ``<= tol``."""
    if tol < 0:
        raise PreprocessError(f"tolerance must be non-negative, got {tol}")
    sds = _sample_sd(m.values)
    keep = sds > tol
    if not keep.any():
        raise PreprocessError("every descriptor column is constant")
    kept = tuple(n for n, k in zip(m.descriptor_names, keep) if k)
    removed = tuple(n for n, k in zip(m.descriptor_names, keep) if not k)
    step = {"step": "remove_constant", "tol": tol, "removed": len(removed)}
    return m.select_columns(kept, step), PreprocessReport(removed_constant=removed, kept=kept)


def correlation_matrix(X: np.ndarray) -> np.ndarray:
    """Pearson correlations between the columns of ``X``."""
    Z = X - X.mean(axis=0)
    Z = Z / np.sqrt((Z**2).sum(axis=0))
    return np.clip(Z.T @ Z, -1.0, 1.0)


def correlation_filter(
    m: DescriptorMatrix, threshold: float = DEFAULT_CORRELATION_THRESHOLD
) -> tuple[DescriptorMatrix, PreprocessReport]:
    """Greedy left-to-right removal of cross-correlated columns.

    A column is dropped when ``|r| >= threshold`` against any column already
    kept; the report pairs it with the kept column of largest ``|r|``
    (earliest on ties).
    """
    if not 0 < threshold <= 1:
        raise PreprocessError(f"threshold must lie in (0, 1], got {threshold}")
    sds = _sample_sd(m.values)
    if np.any(sds == 0):
        raise PreprocessError("remove constant columns before the correlation filter")
    R = np.abs(correlation_matrix(m.values))
    kept_idx: list[int] = []
    removed = []
    for j in range(m.shape[1]):
        if kept_idx:
            r = R[j, kept_idx]
            # slack absorbs rounding in exactly collinear columns (|r| = 1 - eps)
            if r.max() >= threshold - 1e-12:
                partner = kept_idx[int(np.argmax(r))]
                signed = float(np.corrcoef(m.values[:, j], m.values[:, partner])[0, 1])
                removed.append((m.descriptor_names[j], m.descriptor_names[partner], signed))
                continue
        kept_idx.append(j)
    kept = tuple(m.descriptor_names[j] for j in kept_idx)
    step = {"step": "correlation_filter", "threshold": threshold, "removed": len(removed)}
    return m.select_columns(kept, step), PreprocessReport(removed_correlated=tuple(removed), kept=kept)


def preprocess(
    m: DescriptorMatrix,
    tol: float = DEFAULT_CONSTANT_TOL,
    threshold: float = DEFAULT_CORRELATION_THRESHOLD,
) -> tuple[DescriptorMatrix, PreprocessReport]:
    """Constant-column removal followed by the correlation filter."""
    m1, rep1 = remove_constant_columns(m, tol)
    m2, rep2 = correlation_filter(m1, threshold)
    return m2, rep1.merge(rep2)


def standardize(m: DescriptorMatrix) -> tuple[DescriptorMatrix, Standardization]:
    std = Standardization.fit(m.values, m.descriptor_names)
    Z = std.transform(m.values)
    step = {"step": "standardize"}
    return DescriptorMatrix(m.compound_ids, m.descriptor_names, Z, m.history + (step,)), std
