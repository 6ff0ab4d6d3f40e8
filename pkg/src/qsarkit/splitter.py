"""Sphere-exclusion training/test splitting.

Centers become training compounds; every unassigned compound inside a
center's sphere goes to the test set. The radius is ``d * sqrt(K)`` in
standardized descriptor space, so a dissimilarity level ``d`` means the same
thing whatever the descriptor count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .data_ingest import Dataset
from .errors import SplitError, TuneError

DEFAULT_D_MAX = 10.0
DEFAULT_BISECTION_DEPTH = 60


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    dissimilarity: float
    radius: float
    seed_rule: str = "max_activity"

    def __post_init__(self):
        if not self.train_ids:
            raise SplitError("split produced an empty training set")
        if set(self.train_ids) & set(self.test_ids):
            raise SplitError("training and test sets overlap")

    @property
    def n_train(self) -> int:
        return len(self.train_ids)

    @property
    def n_test(self) -> int:
        return len(self.test_ids)

    def activity_ranges(self, ds: Dataset) -> dict:
        """Min/max activity on each side; an empty side maps to None."""
        y = dict(zip(ds.ids, ds.activity))
        out = {}
        for side, ids in (("train", self.train_ids), ("test", self.test_ids)):
            vals = [float(y[i]) for i in ids]
            out[side] = [min(vals), max(vals)] if vals else None
        return out

    def to_dict(self) -> dict:
        return {
            "train": list(self.train_ids),
            "test": list(self.test_ids),
            "d": self.dissimilarity,
            "radius": self.radius,
            "seed_rule": self.seed_rule,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SplitAssignment":
        return cls(
            tuple(data["train"]),
            tuple(data["test"]),
            float(data["d"]),
            float(data["radius"]),
            data.get("seed_rule", "max_activity"),
        )


def _standardized(X: np.ndarray) -> np.ndarray:
    sd = X.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise SplitError("constant descriptor column; preprocess before splitting")
    return (X - X.mean(axis=0)) / sd


def _distance_matrix(Z: np.ndarray) -> np.ndarray:
    diff = Z[:, None, :] - Z[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def _sphere_exclusion(D, activity, order, radius, seed_index=None):
    """Core loop on a precomputed distance matrix.

    ``order`` ranks rows for tie-breaking (lower rank wins).
    Returns (train_rows, test_rows) as lists of row indices.
    """
    n = D.shape[0]
    unassigned = np.ones(n, dtype=bool)
    train, test = [], []
    # distance from each row to its nearest training center so far
    nearest = np.full(n, np.inf)
    while unassigned.any():
        cand = np.flatnonzero(unassigned)
        if not train:
            if seed_index is not None:
                center = seed_index
            else:
                best = activity[cand].max()
                ties = cand[activity[cand] == best]
                center = ties[np.argmin(order[ties])]
        else:
            far = nearest[cand].max()
            ties = cand[nearest[cand] == far]
            center = ties[np.argmin(order[ties])]
        train.append(int(center))
        unassigned[center] = False
        nearest = np.minimum(nearest, D[center])
        inside = np.flatnonzero(unassigned & (D[center] <= radius))
        inside = inside[np.argsort(order[inside], kind="stable")]
        test.extend(int(i) for i in inside)
        unassigned[inside] = False
    return train, test


def _tie_order(ids) -> np.ndarray:
    ranks = np.empty(len(ids), dtype=np.int64)
    ranks[np.argsort(np.array(ids, dtype=object), kind="stable")] = np.arange(len(ids))
    return ranks


def sphere_exclusion_split(
    ds: Dataset,
    d: float,
    *,
    radius: float | None = None,
    standardize: bool = True,
    seed_index: int | None = None,
) -> SplitAssignment:
    """Split ``ds`` by sphere exclusion at dissimilarity level ``d``.

    ``radius`` overrides the ``d * sqrt(K)`` rule, and ``standardize=False``
    measures distances on the raw descriptor scale. ``seed_index`` replaces
    the maximum-activity rule for picking the first center.
    """
    n = len(ds)
    if n == 0:
        raise SplitError("cannot split an empty dataset")
    if n < 2:
        raise SplitError("sphere exclusion needs at least two compounds")
    if d < 0:
        raise SplitError(f"dissimilarity must be >= 0, got {d}")
    if seed_index is not None and not 0 <= seed_index < n:
        raise SplitError(f"seed index {seed_index} outside 0..{n - 1}")
    Z = _standardized(ds.X) if standardize else np.asarray(ds.X, dtype=np.float64)
    D = _distance_matrix(Z)
    R = d * math.sqrt(ds.X.shape[1]) if radius is None else float(radius)
    return _assignment(ds, D, R, d, seed_index)


def _assignment(ds, D, R, d, seed_index):
    train, test = _sphere_exclusion(D, ds.activity, _tie_order(ds.ids), R, seed_index)
    rule = "max_activity" if seed_index is None else f"index:{seed_index}"
    return SplitAssignment(
        tuple(ds.ids[i] for i in train),
        tuple(ds.ids[i] for i in test),
        float(d),
        float(R),
        rule,
    )


def tune_dissimilarity(
    ds: Dataset,
    target_test: int,
    *,
    d_max: float = DEFAULT_D_MAX,
    depth: int = DEFAULT_BISECTION_DEPTH,
    seed_index: int | None = None,
) -> tuple[float, SplitAssignment]:
    """Bisect ``d`` in ``[0, d_max]`` for the smallest probed level giving at
    least ``target_test`` test compounds.

    Only observed sizes are trusted; test-set size need not be monotone in
    ``d``. The achieved size may exceed the target when the size jumps.
    """
    n = len(ds)
    if not 0 < target_test < n:
        raise SplitError(f"target test size must lie in 1..{n - 1}, got {target_test}")
    D = _distance_matrix(_standardized(ds.X))
    scale = math.sqrt(ds.X.shape[1])

    probes: dict[float, SplitAssignment] = {}

    def probe(d):
        if d not in probes:
            probes[d] = _assignment(ds, D, d * scale, d, seed_index)
        return probes[d]

    hi_split = probe(d_max)
    if hi_split.n_test < target_test:
        best = max(probes.values(), key=lambda s: s.n_test)
        raise TuneError(
            f"target of {target_test} test compounds unreachable with d <= {d_max} "
            f"(best {best.n_test})",
            best=best,
        )
    lo, hi = 0.0, d_max
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if probe(mid).n_test >= target_test:
            hi = mid
        else:
            lo = mid
    return hi, probes[hi]


def size_profile(ds: Dataset, grid) -> list[tuple[float, int]]:
    """Test-set size at each ``d`` in ``grid``; useful for picking a level by hand."""
    D = _distance_matrix(_standardized(ds.X))
    scale = math.sqrt(ds.X.shape[1])
    order = _tie_order(ds.ids)
    return [
        (float(d), len(_sphere_exclusion(D, ds.activity, order, d * scale)[1])) for d in grid
    ]


def check_split(ds: Dataset, split: SplitAssignment, *, standardize: bool = True) -> tuple[float, float]:
    """Return (min train-train distance, max test-to-nearest-train distance)."""
    Z = _standardized(ds.X) if standardize else np.asarray(ds.X, dtype=np.float64)
    lookup = {c: i for i, c in enumerate(ds.ids)}
    tr = Z[[lookup[i] for i in split.train_ids]]
    sep = math.inf
    if len(tr) > 1:
        Dtt = _distance_matrix(tr)
        sep = float(Dtt[np.triu_indices(len(tr), 1)].min())
    cover = 0.0
    if split.test_ids:
        te = Z[[lookup[i] for i in split.test_ids]]
        cover = float(np.sqrt(((te[:, None, :] - tr[None, :, :]) ** 2).sum(-1)).min(axis=1).max())
    return sep, cover
