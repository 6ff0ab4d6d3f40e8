"""Synthetic descriptor/activity generators for demos and tests."""

from __future__ import annotations

import numpy as np

from .data_ingest import Dataset


def make_planted(
    n: int = 40,
    p: int = 12,
    informative=(0, 1, 2, 3, 4),
    coef=None,
    noise: float = 0.1,
    intercept: float = 5.0,
    seed: int = 0,
) -> Dataset:
    """Independent Gaussian descriptors; activity depends linearly on ``informative`` columns only."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    informative = [j for j in informative if j < p]
    if coef is None:
        coef = rng.choice([-1.0, 1.0], size=len(informative)) * rng.uniform(0.5, 1.5, size=len(informative))
    y = intercept + X[:, informative] @ np.asarray(coef) + noise * rng.normal(size=n)
    return Dataset.from_arrays(X, y, names=[f"d{j:02d}" for j in range(p)])


def make_latent(
    n: int = 30,
    p: int = 8,
    n_factors: int = 3,
    x_noise: float = 0.05,
    y_noise: float = 0.05,
    seed: int = 0,
) -> Dataset:
    """Descriptors and activity driven by ``n_factors`` shared latent scores."""
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(n, n_factors))
    V = rng.normal(size=(n_factors, p))
    X = T @ V + x_noise * rng.normal(size=(n, p))
    y = 5.0 + T @ rng.uniform(0.5, 1.5, size=n_factors) + y_noise * rng.normal(size=n)
    return Dataset.from_arrays(X, y, names=[f"d{j:02d}" for j in range(p)])


def make_noise(n: int = 30, p: int = 4, seed: int = 0) -> Dataset:
    """Descriptors with no relation at all to the activity."""
    rng = np.random.default_rng(seed)
    return Dataset.from_arrays(rng.normal(size=(n, p)), 5.0 + rng.normal(size=n), names=[f"d{j:02d}" for j in range(p)])


def make_clusters(sizes=(5, 5), spread: float = 0.05, separation: float = 10.0, p: int = 3, seed: int = 0) -> Dataset:
    """Tight, well-separated descriptor clusters."""
    rng = np.random.default_rng(seed)
    blocks = []
    for i, size in enumerate(sizes):
        centre = np.zeros(p)
        centre[i % p] = separation * (1 + i // p)
        blocks.append(centre + spread * rng.normal(size=(size, p)))
    X = np.vstack(blocks)
    y = 5.0 + rng.normal(size=X.shape[0])
    return Dataset.from_arrays(X, y, names=[f"d{j:02d}" for j in range(p)])
