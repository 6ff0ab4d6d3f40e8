"""MLR, PCR and PLS fitting with coefficients reported in original descriptor units.

Every fitted model reduces to ``pIC50 = c + sum_i b_i * x_i``, the same shape
as a published QSAR equation, so externally supplied equations load into the
same :class:`FittedModel` and predict through the same code path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data_ingest import DescriptorMatrix
from .errors import ContributionError, FitError, PredictError
from .preprocess import Standardization

METHODS = ("MLR", "PCR", "PLS")

# relative singular-value cutoff used for every rank decision
RANK_RTOL = 1e-10
NIPALS_TOL = 1e-12
NIPALS_MAX_ITER = 500


@dataclass(frozen=True)
class ModelSpec:
    method: str
    descriptors: tuple[str, ...]
    n_components: int | None = None

    def __post_init__(self):
        method = self.method.upper()
        if method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        object.__setattr__(self, "method", method)
        object.__setattr__(self, "descriptors", tuple(self.descriptors))
        if not self.descriptors:
            raise ValueError("a model needs at least one descriptor")
        if method == "MLR" or self.n_components is None:
            object.__setattr__(self, "n_components", len(self.descriptors))
        if not 1 <= self.n_components <= len(self.descriptors):
            raise ValueError(
                f"n_components must lie in 1..{len(self.descriptors)}, got {self.n_components}"
            )


@dataclass(frozen=True)
class FittedModel:
    spec: ModelSpec
    coefficients: np.ndarray
    intercept: float
    standardization: Standardization | None = None
    train_ids: tuple[str, ...] = ()
    # optional display-only extras, e.g. published +/- errors or PCR variance ratios
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64).ravel()
        if coef.shape[0] != len(self.spec.descriptors):
            raise FitError(
                f"{coef.shape[0]} coefficients for {len(self.spec.descriptors)} descriptors"
            )
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "train_ids", tuple(self.train_ids))

    @property
    def descriptors(self) -> tuple[str, ...]:
        return self.spec.descriptors

    def predict_array(self, X: np.ndarray) -> np.ndarray:
        """Predict rows of ``X`` whose columns follow ``spec.descriptors``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return self.intercept + X @ self.coefficients

    def equation(self, digits: int = 4) -> str:
        terms = []
        for i, (name, b) in enumerate(zip(self.descriptors, self.coefficients)):
            mag = f"{abs(b):.{digits}f}({name})"
            if i == 0:
                terms.append(f"-{mag}" if b < 0 else mag)
            else:
                terms.append(f"{'-' if b < 0 else '+'} {mag}")
        c = self.intercept
        return f"pIC50 = {' '.join(terms)} {'-' if c < 0 else '+'} {abs(c):.{digits}f}"

    def to_dict(self) -> dict:
        out = {
            "method": self.spec.method,
            "descriptors": list(self.descriptors),
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "n_components": self.spec.n_components,
        }
        if self.standardization is not None:
            out["means"] = self.standardization.means.tolist()
            out["sds"] = self.standardization.sds.tolist()
        if self.train_ids:
            out["train_ids"] = list(self.train_ids)
        if self.extras:
            out["extras"] = self.extras
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "FittedModel":
        try:
            spec = ModelSpec(data["method"], data["descriptors"], data.get("n_components"))
            std = None
            if "sds" in data:
                means = data.get("means", [0.0] * len(spec.descriptors))
                std = Standardization(spec.descriptors, means, data["sds"])
            return cls(
                spec,
                data["coefficients"],
                data["intercept"],
                std,
                tuple(data.get("train_ids", ())),
                dict(data.get("extras", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FitError(f"malformed model description: {exc}") from None


def load_model(path) -> FittedModel:
    """Load a model JSON file, fitted here or transcribed from a publication."""
    return FittedModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_model(model: FittedModel, path) -> None:
    Path(path).write_text(model.to_json() + "\n", encoding="utf-8")


def _names(descriptors, p):
    if descriptors is None:
        return tuple(f"x{j + 1}" for j in range(p))
    descriptors = tuple(descriptors)
    if len(descriptors) != p:
        raise FitError(f"{len(descriptors)} names given for {p} descriptor columns")
    return descriptors


def _prepare(X, y):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise FitError(f"{X.shape[0]} descriptor rows but {y.shape[0]} responses")
    return X, y


def _numerical_rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def _standardize_train(X, names):
    n = X.shape[0]
    if n < 2:
        raise FitError("at least two training rows are needed")
    std = Standardization.fit(X, names)
    if np.any(std.sds == 0):
        bad = [nm for nm, s in zip(std.names, std.sds) if s == 0]
        raise FitError(f"constant descriptor(s) in training rows: {', '.join(bad)}")
    return std, (X - std.means) / std.sds


def _back_map(beta_std, std, y_mean):
    coef = beta_std / std.sds
    return coef, y_mean - std.means @ coef


def fit_mlr(X, y, descriptors=None, train_ids=()) -> FittedModel:
    """Ordinary least squares with intercept, solved by QR of the centred design."""
    X, y = _prepare(X, y)
    n, p = X.shape
    names = _names(descriptors, p)
    if n <= p + 1:
        raise FitError(f"MLR with {p} descriptors needs more than {p + 1} rows, got {n}")
    std, Z = _standardize_train(X, names)
    if _numerical_rank(np.linalg.svd(Z, compute_uv=False)) < p:
        raise FitError(f"design matrix with {p} descriptors is rank deficient")
    y_mean = y.mean()
    Q, R = np.linalg.qr(Z)
    beta_std = np.linalg.solve(R, Q.T @ (y - y_mean))
    coef, c = _back_map(beta_std, std, y_mean)
    return FittedModel(ModelSpec("MLR", names), coef, c, std, train_ids)


def fit_pcr(X, y, n_components: int, descriptors=None, train_ids=()) -> FittedModel:
    """Regress y on the leading principal-component scores of standardized X."""
    X, y = _prepare(X, y)
    n, p = X.shape
    names = _names(descriptors, p)
    if not 1 <= n_components <= p:
        raise FitError(f"n_components must lie in 1..{p}, got {n_components}")
    if n <= n_components + 1:
        raise FitError(f"PCR with {n_components} components needs more than {n_components + 1} rows")
    std, Z = _standardize_train(X, names)
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    rank = _numerical_rank(s)
    if n_components > rank:
        raise FitError(f"{n_components} components requested but standardized X has rank {rank}")
    y_mean = y.mean()
    # scores T = U S, so (T'T)^-1 T'y = U'y / s
    gamma = (U[:, :n_components].T @ (y - y_mean)) / s[:n_components]
    beta_std = Vt[:n_components].T @ gamma
    coef, c = _back_map(beta_std, std, y_mean)
    ratio = (s**2 / np.sum(s**2))[:n_components]
    return FittedModel(
        ModelSpec("PCR", names, n_components),
        coef,
        c,
        std,
        train_ids,
        {"explained_variance_ratio": ratio.tolist()},
    )


def nipals_pls1(Z: np.ndarray, y: np.ndarray, n_components: int):
    """NIPALS for a single centred response on centred/scaled ``Z``.

    Only X is deflated. Returns (W, P, q) with weights and loadings as columns.
    Raises FitError when the residual X runs out of structure.
    """
    n, p = Z.shape
    Xa = Z.copy()
    W = np.zeros((p, n_components))
    P = np.zeros((p, n_components))
    q = np.zeros(n_components)
    scale = np.linalg.norm(Z)
    for a in range(n_components):
        if np.linalg.norm(Xa) <= RANK_RTOL * scale:
            raise FitError(f"residual X vanished; only {a} PLS component(s) achievable")
        u = y.copy()
        w = np.zeros(p)
        for _ in range(NIPALS_MAX_ITER):
            w_new = Xa.T @ u
            norm = np.linalg.norm(w_new)
            if norm == 0:
                raise FitError(f"zero PLS weight vector; only {a} PLS component(s) achievable")
            w_new /= norm
            t = Xa @ w_new
            qa = (y @ t) / (t @ t)
            converged = np.linalg.norm(w_new - w) < NIPALS_TOL
            w = w_new
            if converged or qa == 0:
                break
            u = y / qa
        t = Xa @ w
        tt = t @ t
        if tt <= (RANK_RTOL * scale) ** 2:
            raise FitError(f"degenerate PLS score; only {a} PLS component(s) achievable")
        P[:, a] = Xa.T @ t / tt
        q[a] = (y @ t) / tt
        W[:, a] = w
        Xa = Xa - np.outer(t, P[:, a])
    return W, P, q


def _pls_beta_path(W, P, q):
    """Standardized-space coefficients for 1..A components (columns)."""
    A = W.shape[1]
    betas = np.zeros((W.shape[0], A))
    for a in range(1, A + 1):
        Wa, Pa = W[:, :a], P[:, :a]
        betas[:, a - 1] = Wa @ np.linalg.solve(Pa.T @ Wa, q[:a])
    return betas


def fit_pls(X, y, n_components: int, descriptors=None, train_ids=()) -> FittedModel:
    """Single-response PLS regression via NIPALS on standardized X."""
    X, y = _prepare(X, y)
    n, p = X.shape
    names = _names(descriptors, p)
    if n < 3:
        raise FitError(f"PLS needs at least 3 rows, got {n}")
    if not 1 <= n_components <= p:
        raise FitError(f"n_components must lie in 1..{p}, got {n_components}")
    std, Z = _standardize_train(X, names)
    y_mean = y.mean()
    W, P, q = nipals_pls1(Z, y - y_mean, n_components)
    beta_std = _pls_beta_path(W, P, q)[:, -1]
    coef, c = _back_map(beta_std, std, y_mean)
    return FittedModel(ModelSpec("PLS", names, n_components), coef, c, std, train_ids)


def fit(spec: ModelSpec, X, y, train_ids=()) -> FittedModel:
    """Dispatch on ``spec.method``; ``X`` columns follow ``spec.descriptors``."""
    if spec.method == "MLR":
        return fit_mlr(X, y, spec.descriptors, train_ids)
    if spec.method == "PCR":
        return fit_pcr(X, y, spec.n_components, spec.descriptors, train_ids)
    return fit_pls(X, y, spec.n_components, spec.descriptors, train_ids)


def fit_dataset(spec: ModelSpec, ds) -> FittedModel:
    return fit(spec, ds.matrix.columns(spec.descriptors), ds.activity, ds.ids)


def component_path_predictions(method: str, X_train, y_train, X_new, max_c: int) -> np.ndarray:
    """Predictions at ``X_new`` for every component count 1..max_c.

    One decomposition serves all counts. Returns shape (len(X_new), max_c).
    """
    X_train, y_train = _prepare(X_train, y_train)
    std, Z = _standardize_train(X_train, None)
    Znew = (np.asarray(X_new, dtype=np.float64) - std.means) / std.sds
    y_mean = y_train.mean()
    yc = y_train - y_mean
    if method == "PCR":
        U, s, Vt = np.linalg.svd(Z, full_matrices=False)
        rank = _numerical_rank(s)
        if max_c > rank:
            raise FitError(f"{max_c} components requested but standardized X has rank {rank}")
        gamma = (U[:, :max_c].T @ yc) / s[:max_c]
        contrib = (Znew @ Vt[:max_c].T) * gamma
        return y_mean + np.cumsum(contrib, axis=1)
    if method == "PLS":
        W, P, q = nipals_pls1(Z, yc, max_c)
        return y_mean + Znew @ _pls_beta_path(W, P, q)
    raise ValueError(f"component path undefined for {method}")


def choose_components(X, y, method: str, max_c: int) -> int:
    """Component count in 1..max_c with the highest LOO q2 (smallest on ties).

    ``max_c`` is clipped to the numerical rank of the standardized training X.
    """
    from .validation import loo_q2_curve

    method = method.upper()
    if method not in ("PCR", "PLS"):
        raise ValueError("component selection applies to PCR and PLS only")
    if max_c < 1:
        raise ValueError("max_c must be >= 1")
    X, y = _prepare(X, y)
    _, Z = _standardize_train(X, None)
    rank = _numerical_rank(np.linalg.svd(Z, compute_uv=False))
    max_c = min(max_c, rank, X.shape[0] - 2)
    if max_c < 1:
        raise FitError("too few rows or too little rank for any latent component")
    q2 = loo_q2_curve(X, y, method, max_c)
    best = 0
    for c in range(1, max_c):
        if q2[c] > q2[best] + 1e-12:
            best = c
    return best + 1


def predict(model: FittedModel, x) -> float | np.ndarray:
    """Predict pIC50 from a mapping of descriptor values or a DescriptorMatrix.

    Mappings give one float; matrices give one prediction per row. Extra
    descriptors are ignored; a missing one raises PredictError.
    """
    if isinstance(x, DescriptorMatrix):
        missing = [n for n in model.descriptors if n not in x.descriptor_names]
        if missing:
            raise PredictError(f"descriptor(s) required by the model are missing: {', '.join(missing)}")
        return model.predict_array(x.columns(model.descriptors))
    missing = [n for n in model.descriptors if n not in x]
    if missing:
        raise PredictError(f"descriptor(s) required by the model are missing: {', '.join(missing)}")
    row = np.array([float(x[n]) for n in model.descriptors])
    return float(model.predict_array(row)[0])


@dataclass(frozen=True)
class ContributionBreakdown:
    descriptors: tuple[str, ...]
    percentages: tuple[float, ...]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.descriptors, self.percentages))

    def sorted(self) -> list[tuple[str, float]]:
        """(name, percentage) pairs ordered by magnitude, largest first."""
        pairs = list(zip(self.descriptors, self.percentages))
        return sorted(pairs, key=lambda t: -abs(t[1]))


def contributions(model: FittedModel, sds: Sequence[float] | None = None) -> ContributionBreakdown:
    """Signed percentage contribution of each descriptor.

    Each descriptor's weight is its coefficient times the training-set sample
    standard deviation, normalised so absolute values sum to 100.
    """
    if sds is None:
        if model.standardization is None:
            raise ContributionError(
                "model carries no descriptor standard deviations; pass sds explicitly"
            )
        sds = model.standardization.sds
    weights = model.coefficients * np.asarray(sds, dtype=np.float64)
    total = np.abs(weights).sum()
    if total == 0:
        raise ContributionError("every coefficient-times-sd product is zero")
    pct = 100.0 * weights / total
    return ContributionBreakdown(model.descriptors, tuple(float(v) for v in pct))
