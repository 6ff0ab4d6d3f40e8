"""Internal, external and randomization validation of fitted QSAR models."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .data_ingest import Dataset
from .errors import FitError, MetricError, RandomizationError
from .regression import FittedModel, ModelSpec, component_path_predictions, fit, predict

GATE_THRESHOLDS = {"r2": 0.6, "q2": 0.6, "pred_r2": 0.5}
ALPHA_LEVELS = (0.001, 0.01, 0.05, 0.1)
DEFAULT_RANDOMIZATIONS = 100


def r_squared(y_obs, y_pred) -> float:
    y_obs = np.asarray(y_obs, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_obs.size < 2:
        raise MetricError("r2 needs at least two observations")
    sst = np.sum((y_obs - y_obs.mean()) ** 2)
    if sst == 0:
        raise MetricError("observed activities are constant")
    return float(1.0 - np.sum((y_obs - y_pred) ** 2) / sst)


def degrees_of_freedom(n_train: int, n_components: int) -> int:
    df = n_train - n_components - 1
    if df <= 0:
        raise MetricError(f"non-positive degrees of freedom ({n_train} rows, {n_components} components)")
    return df


def f_test(r2: float, n_components: int, df: int) -> float:
    """Fisher ratio of explained to residual mean squares."""
    if df <= 0:
        raise MetricError(f"df must be positive, got {df}")
    if not 0 <= r2 < 1:
        raise MetricError(f"F is undefined for r2 = {r2}")
    return (r2 / n_components) / ((1.0 - r2) / df)


@dataclass(frozen=True)
class LOOResult:
    q2: float
    q2_se: float
    predictions: np.ndarray
    press: float


def _loo_mlr(X, y):
    """Exact leave-one-out predictions for OLS via the hat-matrix identity."""
    n, p = X.shape
    A = np.column_stack([X - X.mean(axis=0), np.ones(n)])
    Q, R = np.linalg.qr(A)
    s = np.abs(np.diag(R))
    if s.min() <= 1e-10 * s.max():
        raise FitError("design matrix is rank deficient")
    beta = np.linalg.solve(R, Q.T @ y)
    resid = y - A @ beta
    h = np.sum(Q**2, axis=1)
    bad = np.flatnonzero(h > 1 - 1e-10)
    if bad.size:
        raise FitError(f"fold {int(bad[0])}: design becomes rank deficient without this row")
    return y - resid / (1.0 - h)


def _check_fold_rows(n):
    if n < 3:
        raise FitError("leave-one-out needs at least 3 training rows")


def loo_predictions(X, y, spec: ModelSpec) -> np.ndarray:
    """Prediction for each row from a model refit without it.

    Every fold re-standardizes on its own rows. MLR uses the closed-form
    deletion identity, which equals refitting.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = len(y)
    _check_fold_rows(n)
    if spec.method == "MLR":
        if n - 1 <= X.shape[1] + 1:
            raise FitError(f"fold 0: MLR with {X.shape[1]} descriptors needs more than {X.shape[1] + 1} rows")
        return _loo_mlr(X, y)
    return _loo_path(X, y, spec.method, spec.n_components)[:, -1]


def _loo_path(X, y, method, max_c):
    n = len(y)
    out = np.empty((n, max_c))
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        mask[i] = False
        try:
            out[i] = component_path_predictions(method, X[mask], y[mask], X[i : i + 1], max_c)[0]
        except FitError as exc:
            raise FitError(f"fold {i}: {exc}") from None
        finally:
            mask[i] = True
    return out


def _q2(y, preds):
    sst = np.sum((y - y.mean()) ** 2)
    if sst == 0:
        raise MetricError("observed activities are constant")
    resid = preds - (y[:, None] if preds.ndim == 2 else y)
    press = np.sum(resid**2, axis=0)
    return 1.0 - press / sst, press


def loo_q2_curve(X, y, method: str, max_c: int) -> np.ndarray:
    """LOO q2 for each component count 1..max_c (PCR or PLS)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    _check_fold_rows(len(y))
    q2, _ = _q2(y, _loo_path(X, y, method, max_c))
    return q2


def loo_q2(ds: Dataset, spec: ModelSpec) -> LOOResult:
    """Leave-one-out q2 over the rows of ``ds`` for the model ``spec``.

    The standard error uses ``df = n - n_components - 1`` of the full set.
    """
    X = ds.matrix.columns(spec.descriptors)
    y = ds.activity
    preds = loo_predictions(X, y, spec)
    q2, press = _q2(y, preds)
    df = degrees_of_freedom(len(y), spec.n_components)
    return LOOResult(float(q2), math.sqrt(press / df), preds, float(press))


def external_r2(y_test, y_pred, y_train_mean: float) -> tuple[float, float]:
    """(pred_r2, pred_r2_se) from test observations and predictions."""
    y_test = np.asarray(y_test, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_test.size == 0:
        raise MetricError("external validation needs a non-empty test set")
    sse = float(np.sum((y_pred - y_test) ** 2))
    denom = float(np.sum((y_test - y_train_mean) ** 2))
    if denom == 0:
        raise MetricError("test activities all equal the training mean")
    return 1.0 - sse / denom, math.sqrt(sse / y_test.size)


def pred_r2(model: FittedModel, test: Dataset, y_train_mean: float) -> tuple[float, float]:
    """External r2 anchored on the training-set mean activity."""
    if len(test) == 0:
        raise MetricError("external validation needs a non-empty test set")
    return external_r2(test.activity, predict(model, test.matrix), y_train_mean)


@dataclass(frozen=True)
class ValidationReport:
    n_train: int
    n_test: int
    k: int
    n_components: int
    df: int
    r2: float
    q2: float
    pred_r2: float | None
    r2_se: float
    q2_se: float
    pred_r2_se: float | None
    f_test: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def validate_model(model: FittedModel, train: Dataset, test: Dataset | None = None) -> ValidationReport:
    """Compute the full statistic set for ``model`` fitted on ``train``."""
    spec = model.spec
    y = train.activity
    fitted = predict(model, train.matrix)
    r2 = r_squared(y, fitted)
    c = spec.n_components
    df = degrees_of_freedom(len(train), c)
    sse = float(np.sum((y - fitted) ** 2))
    loo = loo_q2(train, spec)
    try:
        F = f_test(r2, c, df)
    except MetricError:
        F = math.inf
    pr2 = pr2_se = None
    n_test = 0 if test is None else len(test)
    if n_test:
        pr2, pr2_se = pred_r2(model, test, float(y.mean()))
    return ValidationReport(
        n_train=len(train),
        n_test=n_test,
        k=len(spec.descriptors),
        n_components=c,
        df=df,
        r2=r2,
        q2=loo.q2,
        pred_r2=pr2,
        r2_se=math.sqrt(sse / df),
        q2_se=loo.q2_se,
        pred_r2_se=pr2_se,
        f_test=F,
    )


def z_score(h: float, samples) -> float:
    """(h - mean) / sd of the scrambled statistic (sd with n-1 denominator)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size and np.all(samples == samples[0]):
        # the float mean of identical values can be off by an ulp
        mu, sigma = samples[0], 0.0
    else:
        mu = samples.mean()
        sigma = samples.std(ddof=1) if samples.size > 1 else 0.0
    if sigma == 0:
        if h == mu:
            return 0.0
        return math.copysign(math.inf, h - mu)
    return float((h - mu) / sigma)


def alpha_level(z: float) -> float | None:
    """Smallest conventional level exceeding the one-tailed normal p-value of ``z``.

    None means not significant at 0.1.
    """
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    for level in ALPHA_LEVELS:
        if p < level:
            return level
    return None


@dataclass(frozen=True)
class RandomizationResult:
    n_iterations: int
    n_failed: int
    r2_samples: tuple[float, ...]
    q2_samples: tuple[float, ...]
    h_r2: float
    h_q2: float
    best_ran_r2: float
    best_ran_q2: float
    mu_r2: float
    sigma_r2: float
    mu_q2: float
    sigma_q2: float
    z_score_r2: float
    z_score_q2: float
    alpha_r2: float | None
    alpha_q2: float | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r2_samples"] = list(self.r2_samples)
        d["q2_samples"] = list(self.q2_samples)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    """PCG64 stream keyed on (master seed, iteration index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, iteration])))


def y_randomization(
    ds: Dataset,
    spec: ModelSpec,
    n_iterations: int = DEFAULT_RANDOMIZATIONS,
    rng_seed: int = 0,
    *,
    permutation_hook=None,
) -> RandomizationResult:
    """Y-scrambling test: refit ``spec`` on permuted activities.

    Each iteration draws its permutation from its own seeded stream, so the
    result does not depend on evaluation order. ``permutation_hook(i, n)``
    replaces the random permutation (used in tests).
    """
    if n_iterations < 10:
        raise RandomizationError(f"at least 10 iterations are required, got {n_iterations}")
    X = ds.matrix.columns(spec.descriptors)
    y = ds.activity
    n = len(y)
    model = fit(spec, X, y)
    h_r2 = r_squared(y, model.predict_array(X))
    h_q2 = loo_q2(ds, spec).q2

    r2s, q2s = [], []
    failed = 0
    for i in range(n_iterations):
        perm = permutation_hook(i, n) if permutation_hook else iteration_rng(rng_seed, i).permutation(n)
        ys = y[np.asarray(perm)]
        try:
            m = fit(spec, X, ys)
            r2 = r_squared(ys, m.predict_array(X))
            q2 = float(_q2(ys, loo_predictions(X, ys, spec))[0])
        except (FitError, MetricError):
            failed += 1
            continue
        r2s.append(r2)
        q2s.append(q2)
    if failed * 2 > n_iterations:
        raise RandomizationError(f"{failed} of {n_iterations} scrambled fits failed")

    def sd(v):
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    z_r2 = z_score(h_r2, r2s)
    z_q2 = z_score(h_q2, q2s)
    return RandomizationResult(
        n_iterations=n_iterations,
        n_failed=failed,
        r2_samples=tuple(r2s),
        q2_samples=tuple(q2s),
        h_r2=h_r2,
        h_q2=h_q2,
        best_ran_r2=max(r2s),
        best_ran_q2=max(q2s),
        mu_r2=float(np.mean(r2s)),
        sigma_r2=sd(r2s),
        mu_q2=float(np.mean(q2s)),
        sigma_q2=sd(q2s),
        z_score_r2=z_r2,
        z_score_q2=z_q2,
        alpha_r2=alpha_level(z_r2),
        alpha_q2=alpha_level(z_q2),
    )


@dataclass(frozen=True)
class GateVerdict:
    passes: bool
    failed_criteria: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"passes": self.passes, "failed_criteria": list(self.failed_criteria)}


def evaluate_gate(report) -> GateVerdict:
    """Predictivity gate: r2 > 0.6, q2 > 0.6 and pred_r2 > 0.5, all strict.

    ``report`` is a ValidationReport or any object/mapping with those fields.
    A missing pred_r2 (no test set) counts as a failure.
    """
    get = report.get if isinstance(report, dict) else lambda k: getattr(report, k)
    failed = []
    for name, bound in GATE_THRESHOLDS.items():
        value = get(name)
        if value is None or not value > bound:
            failed.append(name)
    return GateVerdict(not failed, tuple(failed))
