"""Fixed-size descriptor subset selection by simulated annealing.

The objective is the leave-one-out q2 of the chosen regression method on the
candidate subset. Random numbers come from numpy's PCG64 bit generator seeded
through SeedSequence, so a (seed, config) pair reproduces the same trace on
any platform.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .data_ingest import Dataset
from .errors import FitError, MetricError, SelectError
from .regression import ModelSpec
from .validation import _q2, loo_predictions, loo_q2_curve


@dataclass(frozen=True)
class SAConfig:
    subset_size: int
    t_initial: float = 1.0
    cooling: float = 0.9
    steps_per_temp: int = 50
    t_min: float = 1e-3
    rng_seed: int = 0

    def __post_init__(self):
        if self.subset_size < 1:
            raise SelectError("subset_size must be >= 1")
        if not 0 < self.t_min < self.t_initial:
            raise SelectError("need 0 < t_min < t_initial")
        if not 0 < self.cooling < 1:
            raise SelectError("cooling must lie in (0, 1)")
        if self.steps_per_temp < 1:
            raise SelectError("steps_per_temp must be >= 1")


@dataclass(frozen=True)
class SAStep:
    step: int
    temperature: float
    objective: float
    accepted: bool
    best: float


class SATrace(list):
    """Per-step annealing records; step 0 is the initial subset."""

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "temperature", "objective", "accepted", "best"])
            for s in self:
                w.writerow([s.step, repr(s.temperature), repr(s.objective), int(s.accepted), repr(s.best)])

    def as_records(self) -> list[dict]:
        return [asdict(s) for s in self]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


class SubsetObjective:
    """Cached LOO q2 of ``method`` on descriptor subsets of ``ds``.

    With ``n_components=None`` a PCR/PLS subset is scored at its best
    component count (up to the subset size).
    """

    def __init__(self, ds: Dataset, method: str, n_components: int | None = None):
        self.X = ds.X
        self.y = ds.activity
        self.names = ds.names
        self.method = method.upper()
        self.n_components = n_components
        self._cache: dict[tuple[int, ...], float] = {}

    def __call__(self, subset) -> float:
        key = tuple(sorted(int(i) for i in subset))
        if key not in self._cache:
            self._cache[key] = self._score(key)
        return self._cache[key]

    def _score(self, key) -> float:
        X = self.X[:, key]
        try:
            if self.method == "MLR":
                spec = ModelSpec("MLR", [self.names[i] for i in key])
                return float(_q2(self.y, loo_predictions(X, self.y, spec))[0])
            if self.n_components is not None:
                c = min(self.n_components, len(key))
                return float(loo_q2_curve(X, self.y, self.method, c)[c - 1])
            max_c = min(len(key), len(self.y) - 3)
            return float(np.max(loo_q2_curve(X, self.y, self.method, max_c)))
        except (FitError, MetricError, np.linalg.LinAlgError):
            return -math.inf


def sa_select(
    ds: Dataset,
    method: str,
    k: int,
    cfg: SAConfig | None = None,
    *,
    n_components: int | None = None,
    objective: SubsetObjective | None = None,
) -> tuple[tuple[str, ...], SATrace]:
    """Anneal over size-``k`` descriptor subsets, returning the best one visited."""
    cfg = cfg or SAConfig(subset_size=k)
    p = len(ds.names)
    if k > p:
        raise SelectError(f"subset size {k} exceeds the {p} available descriptors")
    if k < 1:
        raise SelectError("subset size must be >= 1")
    score = objective or SubsetObjective(ds, method, n_components)
    rng = make_rng(cfg.rng_seed)

    current = np.sort(rng.choice(p, size=k, replace=False))
    current_obj = score(current)
    best, best_obj = current.copy(), current_obj
    trace = SATrace([SAStep(0, cfg.t_initial, current_obj, True, best_obj)])
    if k == p:
        return tuple(ds.names[i] for i in best), trace

    T = cfg.t_initial
    step = 0
    while T >= cfg.t_min:
        for _ in range(cfg.steps_per_temp):
            step += 1
            selected = set(current.tolist())
            outside = np.array([j for j in range(p) if j not in selected])
            i_out = rng.integers(k)
            j_in = outside[rng.integers(len(outside))]
            cand = current.copy()
            cand[i_out] = j_in
            cand.sort()
            cand_obj = score(cand)
            delta = cand_obj - current_obj
            u = rng.random()
            if delta >= 0 or (math.isfinite(delta) and u < math.exp(delta / T)):
                accepted = True
            else:
                accepted = math.isinf(current_obj) and current_obj < 0 and math.isinf(cand_obj)
            if accepted:
                current, current_obj = cand, cand_obj
                if current_obj > best_obj:
                    best, best_obj = current.copy(), current_obj
            trace.append(SAStep(step, T, cand_obj, accepted, best_obj))
        T *= cfg.cooling
    return tuple(ds.names[i] for i in best), trace


def sa_select_chains(
    ds: Dataset,
    method: str,
    k: int,
    cfg: SAConfig,
    n_chains: int,
    *,
    n_components: int | None = None,
) -> tuple[tuple[str, ...], SATrace, list[int]]:
    """Run independent chains and keep the best (lowest chain index on ties).

    Chain seeds are spawned from ``cfg.rng_seed``; they are returned so a
    chain can be rerun alone.
    """
    if n_chains < 1:
        raise SelectError("n_chains must be >= 1")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.rng_seed).spawn(n_chains)]
    if n_chains == 1:
        seeds = [cfg.rng_seed]
    objective = SubsetObjective(ds, method, n_components)
    best = None
    for seed in seeds:
        chain_cfg = SAConfig(k, cfg.t_initial, cfg.cooling, cfg.steps_per_temp, cfg.t_min, seed)
        subset, trace = sa_select(ds, method, k, chain_cfg, objective=objective)
        if best is None or trace[-1].best > best[1][-1].best:
            best = (subset, trace)
    return best[0], best[1], seeds


def exhaustive_select(ds: Dataset, method: str, k: int, n_components: int | None = None):
    """Score every size-``k`` subset; returns [(q2, names)] sorted best first."""
    from itertools import combinations

    score = SubsetObjective(ds, method, n_components)
    rows = [(score(c), tuple(ds.names[i] for i in c)) for c in combinations(range(len(ds.names)), k)]
    return sorted(rows, key=lambda t: -t[0])
