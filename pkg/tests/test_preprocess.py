import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import pearson
from qsarkit.data_ingest import DescriptorMatrix
from qsarkit.errors import PreprocessError
from qsarkit.preprocess import (
    correlation_filter,
    preprocess,
    remove_constant_columns,
    standardize,
)


def matrix(values, names=None):
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    names = names or [f"x{j}" for j in range(p)]
    return DescriptorMatrix(tuple(f"c{i}" for i in range(n)), tuple(names), values)


def test_constant_column_removed(rng):
    X = rng.normal(size=(8, 3))
    X[:, 1] = 5.0
    out, rep = remove_constant_columns(matrix(X))
    assert out.descriptor_names == ("x0", "x2")
    assert rep.removed_constant == ("x1",)
    assert out.history[-1]["step"] == "remove_constant"


def test_no_constant_columns_is_identity(rng):
    m = matrix(rng.normal(size=(8, 3)))
    out, rep = remove_constant_columns(m)
    assert out.descriptor_names == m.descriptor_names
    assert rep.removed_constant == ()
    np.testing.assert_array_equal(out.values, m.values)


def test_tolerance_on_sample_sd():
    n = 10
    base = np.linspace(-1, 1, n)
    cols = np.column_stack([np.zeros(n), base, base])
    # scale columns to sample sds 0, 1e-12, 0.5
    cols[:, 1] *= 1e-12 / base.std(ddof=1)
    cols[:, 2] *= 0.5 / base.std(ddof=1)
    sds = cols.std(axis=0, ddof=1)
    np.testing.assert_allclose(sds, [0, 1e-12, 0.5], rtol=1e-9)
    out, rep = remove_constant_columns(matrix(cols), tol=1e-8)
    assert rep.removed_constant == ("x0", "x1")
    assert out.descriptor_names == ("x2",)


def test_all_constant_raises():
    with pytest.raises(PreprocessError):
        remove_constant_columns(matrix(np.ones((4, 2))))


def test_duplicate_column_later_copy_dropped(rng):
    x = rng.normal(size=12)
    z = rng.normal(size=12)
    out, rep = correlation_filter(matrix(np.column_stack([x, z, x]), ["a", "b", "a_copy"]))
    assert out.descriptor_names == ("a", "b")
    (dropped, kept, r), = rep.removed_correlated
    assert (dropped, kept) == ("a_copy", "a")
    assert r == pytest.approx(1.0)


def test_anticorrelated_column_dropped(rng):
    x = rng.normal(size=12)
    y = rng.normal(size=12)
    out, rep = correlation_filter(matrix(np.column_stack([x, -x, y]), ["x", "neg_x", "y"]))
    assert out.descriptor_names == ("x", "y")
    assert rep.removed_correlated[0][:2] == ("neg_x", "x")
    assert rep.removed_correlated[0][2] == pytest.approx(-1.0)


def test_independent_columns_unchanged():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 2))
    assert abs(pearson(X[:, 0], X[:, 1])) < 0.5
    out, rep = correlation_filter(matrix(X))
    assert out.descriptor_names == ("x0", "x1")
    assert rep.removed_correlated == ()


def test_boundary_is_inclusive():
    rng = np.random.default_rng(3)
    a = rng.normal(size=20)
    b = a + 0.3 * rng.normal(size=20)
    r = abs(pearson(a, b))
    m = matrix(np.column_stack([a, b]))
    assert correlation_filter(m, threshold=r - 1e-9)[0].shape[1] == 1
    assert correlation_filter(m, threshold=min(1.0, r + 1e-9))[0].shape[1] == 2


def survivor_correlations_ok(m, threshold):
    X = m.values
    p = X.shape[1]
    return all(abs(pearson(X[:, i], X[:, j])) < threshold for i in range(p) for j in range(i + 1, p))


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, (12, 6), elements=st.floats(-10, 10, allow_nan=False, width=64)),
    st.floats(0.3, 1.0),
)
def test_correlation_filter_properties(values, threshold):
    values = values + np.arange(12)[:, None] * 1e-3 * np.arange(1, 7)  # break exact constancy
    m = matrix(values)
    m, _ = remove_constant_columns(m, tol=1e-6)
    out, rep = correlation_filter(m, threshold)
    assert survivor_correlations_ok(out, threshold)
    # partition of input names
    dropped = [d for d, _, _ in rep.removed_correlated]
    assert sorted(dropped + list(rep.kept)) == sorted(m.descriptor_names)
    # every dropped column names a kept partner it correlates with
    for d, k, r in rep.removed_correlated:
        assert k in rep.kept
        assert abs(r) >= threshold - 1e-12
    # idempotence
    again, rep2 = correlation_filter(out, threshold)
    assert again.descriptor_names == out.descriptor_names
    assert rep2.removed_correlated == ()


def test_threshold_above_max_r_is_identity(rng):
    X = rng.normal(size=(15, 4))
    R = np.abs(np.corrcoef(X, rowvar=False))
    np.fill_diagonal(R, 0)
    out, _ = correlation_filter(matrix(X), threshold=R.max() + 1e-6)
    assert out.shape == (15, 4)


def test_report_deterministic_and_json(rng):
    X = rng.normal(size=(10, 3))
    X = np.column_stack([X, X[:, 0] * 2 + 1, np.full(10, 3.0)])
    m = matrix(X)
    a = preprocess(m)[1].to_json()
    b = preprocess(m)[1].to_json()
    assert a == b
    doc = json.loads(a)
    assert set(doc) == {"removed_constant", "removed_correlated", "kept"}
    assert doc["removed_constant"] == ["x4"]
    assert doc["removed_correlated"][0][:2] == ["x3", "x0"]
    assert sorted(doc["kept"] + doc["removed_constant"] + [r[0] for r in doc["removed_correlated"]]) == list(
        m.descriptor_names
    )


def test_constant_filter_idempotent(rng):
    X = rng.normal(size=(6, 3))
    X[:, 0] = 1.0
    once, _ = remove_constant_columns(matrix(X))
    twice, rep = remove_constant_columns(once)
    assert twice.descriptor_names == once.descriptor_names
    assert rep.removed_constant == ()


def test_standardize_symmetric_column():
    out, std = standardize(matrix([[1.0], [2.0], [3.0]]))
    np.testing.assert_allclose(out.values.ravel(), [-1, 0, 1], atol=1e-12)
    assert std.sds[0] == pytest.approx(1.0)


def test_standardize_random_moments(rng):
    out, std = standardize(matrix(rng.normal(3, 5, size=(10, 3))))
    assert np.all(np.abs(out.values.mean(axis=0)) < 1e-10)
    assert np.all(np.abs(out.values.std(axis=0, ddof=1) - 1) < 1e-10)


def test_standardize_idempotent(rng):
    once, _ = standardize(matrix(rng.normal(size=(10, 3))))
    twice, _ = standardize(once)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-10)


def test_standardize_rejects_constant():
    with pytest.raises(PreprocessError):
        standardize(matrix([[1.0, 2.0], [1.0, 3.0], [1.0, 4.0]]))
