import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_loo_predictions, normal_equations, q2_from
from qsarkit.data_ingest import DescriptorMatrix
from qsarkit.datasets import make_latent
from qsarkit.errors import ContributionError, FitError, PredictError
from qsarkit.regression import (
    FittedModel,
    ModelSpec,
    choose_components,
    component_path_predictions,
    contributions,
    fit,
    fit_mlr,
    fit_pcr,
    fit_pls,
    load_model,
    nipals_pls1,
    predict,
    save_model,
)


def full_rank(seed, n=20, p=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 20, size=p) + rng.normal(0, 5, size=p)
    y = rng.normal(size=n) + X @ rng.normal(size=p)
    return X, y


def planted_factors(seed):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(30, 3))
    V = np.linalg.qr(rng.normal(size=(6, 3)))[0].T * np.array([[3.0], [1.0], [0.3]])
    X = T @ V + 1e-3 * rng.normal(size=(30, 6))
    y = 5 + T @ np.array([0.3, 0.6, 1.0]) + 0.1 * rng.normal(size=30)
    return X, y


def test_exact_linear_fit():
    X = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [2, 1], [1, 3]], dtype=float)
    y = 1 + 2 * X[:, 0] - 3 * X[:, 1]
    m = fit_mlr(X, y)
    np.testing.assert_allclose(m.coefficients, [2, -3], atol=1e-10)
    assert m.intercept == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_mlr_matches_normal_equations(seed):
    X, y = full_rank(seed)
    assert np.linalg.cond(np.column_stack([X, np.ones(len(y))])) < 1e6
    m = fit_mlr(X, y)
    b, c = normal_equations(X, y)
    np.testing.assert_allclose(m.coefficients, b, rtol=0, atol=1e-8)
    assert m.intercept == pytest.approx(c, abs=1e-8)


def test_mlr_residuals_orthogonal():
    X, y = full_rank(3)
    m = fit_mlr(X, y)
    r = y - m.predict_array(X)
    assert abs(r.sum()) < 1e-9
    np.testing.assert_allclose(X.T @ r, 0, atol=1e-8)


def test_mlr_rejects_duplicate_column():
    X, y = full_rank(1)
    with pytest.raises(FitError, match="rank"):
        fit_mlr(np.column_stack([X, X[:, 0]]), y)


def test_mlr_rejects_too_few_rows():
    X, y = full_rank(1, n=5, p=4)
    with pytest.raises(FitError):
        fit_mlr(X, y)


@pytest.mark.parametrize("seed", range(10))
def test_full_component_models_nest_to_mlr(seed):
    X, y = full_rank(seed, n=15, p=3)
    ref = fit_mlr(X, y).predict_array(X)
    for fitter in (fit_pcr, fit_pls):
        np.testing.assert_allclose(fitter(X, y, 3).predict_array(X), ref, atol=1e-6)


def test_pcr_one_component_dominant_axis():
    rng = np.random.default_rng(0)
    t = rng.normal(size=25)
    X = np.column_stack([t, t + 1e-3 * rng.normal(size=25), -t + 1e-3 * rng.normal(size=25)])
    y = 2 * t + 0.01 * rng.normal(size=25)
    m = fit_pcr(X, y, 1)
    assert m.extras["explained_variance_ratio"][0] > 0.99
    pred = m.predict_array(X)
    assert 1 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2) > 0.99


def test_single_descriptor_methods_agree():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(12, 1))
    y = 3 - 2 * x[:, 0] + 0.1 * rng.normal(size=12)
    ref = fit_mlr(x, y)
    for fitter in (fit_pcr, fit_pls):
        m = fitter(x, y, 1)
        np.testing.assert_allclose(m.coefficients, ref.coefficients, atol=1e-10)
        assert m.intercept == pytest.approx(ref.intercept, abs=1e-10)


def test_pls_wide_matrix():
    rng = np.random.default_rng(5)
    T = rng.normal(size=(10, 2))
    X = T @ rng.normal(size=(2, 20)) + 0.01 * rng.normal(size=(10, 20))
    y = T @ [1.0, -0.5] + 0.01 * rng.normal(size=10)
    m = fit_pls(X, y, 2)
    preds = naive_loo_predictions(X, y, lambda a, b, c: fit_pls(a, b, 2).predict_array(c)[0])
    assert q2_from(y, preds) > 0.9
    with pytest.raises(FitError):
        fit_mlr(X, y)
    assert m.coefficients.shape == (20,)


def test_nipals_weights_orthonormal():
    X, y = full_rank(2, n=20, p=5)
    Z = (X - X.mean(0)) / X.std(0, ddof=1)
    W, P, q = nipals_pls1(Z, y - y.mean(), 4)
    np.testing.assert_allclose(W.T @ W, np.eye(4), atol=1e-10)


def test_pls_runs_out_of_components():
    rng = np.random.default_rng(0)
    t = rng.normal(size=12)
    X = np.column_stack([t, 2 * t + 1, -t])
    with pytest.raises(FitError, match="component"):
        fit_pls(X, t + 0.1 * rng.normal(size=12), 2)


def test_component_path_matches_individual_fits():
    X, y = full_rank(7, n=18, p=5)
    Xn = np.random.default_rng(1).normal(size=(4, 5))
    for method, fitter in (("PCR", fit_pcr), ("PLS", fit_pls)):
        path = component_path_predictions(method, X, y, Xn, 5)
        for c in range(1, 6):
            np.testing.assert_allclose(path[:, c - 1], fitter(X, y, c).predict_array(Xn), atol=1e-8)


@pytest.mark.parametrize("method", ["PLS", "PCR"])
def test_choose_components_three_factors(method):
    X, y = planted_factors(0)
    assert choose_components(X, y, method, 5) == 3


@pytest.mark.parametrize("method", ["PLS", "PCR"])
def test_choose_components_single_factor(method):
    rng = np.random.default_rng(2)
    t = rng.normal(size=20)
    X = np.outer(t, [1.0, 2.0, -1.0, 0.5]) + [1.0, 2.0, 3.0, 4.0]
    y = 5 + t + 0.05 * rng.normal(size=20)
    assert choose_components(X, y, method, 5) == 1


def test_choose_components_cap_of_one():
    X, y = planted_factors(0)
    assert choose_components(X, y, "PLS", 1) == 1


def test_choose_components_rejects_mlr():
    X, y = planted_factors(0)
    with pytest.raises(ValueError):
        choose_components(X, y, "MLR", 3)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 10_000),
    st.floats(0.1, 100),
    st.floats(-50, 50),
    st.sampled_from(["MLR", "PCR", "PLS"]),
)
def test_predictions_invariant_to_affine_descriptor_change(seed, scale, shift, method):
    X, y = full_rank(seed, n=14, p=3)
    spec = ModelSpec(method, ("a", "b", "c"), 2)
    a = fit(spec, X, y).predict_array(X)
    b = fit(spec, X * scale + shift, y).predict_array(X * scale + shift)
    np.testing.assert_allclose(a, b, atol=1e-6 * max(1, np.abs(a).max()))


def test_predict_with_published_pls(published_model_path):
    m = load_model(published_model_path("PLS"))
    assert m.standardization is None
    zero = {n: 0.0 for n in m.descriptors}
    assert predict(m, zero) == pytest.approx(4.9478, abs=1e-12)
    assert predict(m, {**zero, "extra": 9.0}) == pytest.approx(4.9478)


@pytest.mark.parametrize("value, expected", [(0.0, 5.3563), (1.0, 7.0960)])
def test_predict_with_published_pcr(published_model_path, value, expected):
    m = load_model(published_model_path("PCR"))
    assert predict(m, {"StsCcount": value}) == pytest.approx(expected, abs=1e-4)


def test_predict_missing_descriptor(published_model_path):
    m = load_model(published_model_path("PLS"))
    with pytest.raises(PredictError, match="chi5chain"):
        predict(m, {n: 0.0 for n in m.descriptors if n != "chi5chain"})


def test_predict_descriptor_matrix_selects_columns():
    X, y = full_rank(0, n=12, p=3)
    m = fit_mlr(X[:, [2, 0]], y, descriptors=("c", "a"))
    dm = DescriptorMatrix(tuple(f"r{i}" for i in range(12)), ("a", "b", "c"), X)
    np.testing.assert_allclose(predict(m, dm), m.predict_array(X[:, [2, 0]]))


def test_model_json_round_trip(tmp_path):
    X, y = full_rank(0, n=12, p=3)
    m = fit_pls(X, y, 2, descriptors=("a", "b", "c"), train_ids=tuple(map(str, range(12))))
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    np.testing.assert_array_equal(back.coefficients, m.coefficients)
    assert back.intercept == m.intercept
    assert back.spec == m.spec
    np.testing.assert_array_equal(back.standardization.sds, m.standardization.sds)
    assert set(json.loads((tmp_path / "m.json").read_text())) >= {
        "method",
        "descriptors",
        "coefficients",
        "intercept",
        "n_components",
    }


def test_equation_string(published_model_path):
    m = load_model(published_model_path("PCR"))
    assert m.equation() == "pIC50 = 1.7397(StsCcount) + 5.3563"
    neg = FittedModel(ModelSpec("MLR", ("a", "b")), [-1.5, 2.0], -0.25)
    assert neg.equation(2) == "pIC50 = -1.50(a) + 2.00(b) - 0.25"


def test_contributions_two_descriptors():
    m = FittedModel(ModelSpec("MLR", ("a", "b")), [3.0, -1.0], 0.0)
    got = contributions(m, sds=[1.0, 1.0]).as_dict()
    assert got == pytest.approx({"a": 75.0, "b": -25.0})


def test_contributions_single_descriptor():
    X, y = full_rank(0, n=10, p=1)
    m = fit_mlr(X, y)
    (pct,) = contributions(m).percentages
    assert pct == pytest.approx(100.0 * np.sign(m.coefficients[0]))


def test_contributions_require_sds(published_model_path):
    with pytest.raises(ContributionError):
        contributions(load_model(published_model_path("PLS")))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["MLR", "PCR", "PLS"]), st.integers(1, 5))
def test_contributions_absolute_sum(seed, method, p):
    X, y = full_rank(seed, n=15, p=p)
    m = fit(ModelSpec(method, tuple(f"x{i}" for i in range(p)), max(1, p - 1)), X, y)
    pct = np.array(contributions(m).percentages)
    assert abs(np.abs(pct).sum() - 100) <= 0.01
    assert np.all(np.sign(pct) == np.sign(m.coefficients))


def test_latent_generator_fits():
    ds = make_latent(seed=1)
    m = fit_pls(ds.X, ds.activity, 3)
    assert np.corrcoef(m.predict_array(ds.X), ds.activity)[0, 1] > 0.95
