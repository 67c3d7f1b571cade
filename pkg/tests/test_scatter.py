import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from continuum.errors import InvalidDataError, InvalidLabelsError, RankError
from continuum.scatter import (Dataset, build_scatter, center_columns, class_means,
                               encode_supervision, fit_scatter, within_scatter)


def brute_scatters(X, labels):
    """Direct p x p computation from the definitions (divisor n)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    Xc = X - X.mean(axis=1, keepdims=True)
    St = Xc @ Xc.T / n
    Sw = np.zeros_like(St)
    Sb = np.zeros_like(St)
    xbar = X.mean(axis=1)
    for c in np.unique(labels):
        Xk = X[:, labels == c]
        mk = Xk.mean(axis=1)
        R = Xk - mk[:, None]
        Sw += R @ R.T / n
        Sb += Xk.shape[1] / n * np.outer(mk - xbar, mk - xbar)
    return St, Sw, Sb


def test_center_columns_example():
    Xc, mean = center_columns([[1, 3], [2, 2]])
    np.testing.assert_array_equal(Xc, [[-1, 1], [0, 0]])
    np.testing.assert_array_equal(mean, [2, 2])


def test_center_columns_idempotent_and_random(rng):
    X = rng.standard_normal((5, 20))
    Xc, mean = center_columns(X)
    assert np.all(np.abs(Xc.mean(axis=1)) < 1e-12)
    np.testing.assert_allclose(Xc + mean[:, None], X)
    Xcc, mean2 = center_columns(Xc)
    np.testing.assert_allclose(Xcc, Xc, atol=1e-15)
    assert np.all(np.abs(mean2) < 1e-12)


@pytest.mark.parametrize("X", [np.ones((3, 1)), np.array([[1.0, np.nan]]), np.ones(4)])
def test_center_columns_rejects_bad_input(X):
    with pytest.raises(InvalidDataError):
        center_columns(X)


def test_encoding_rows_match_coding_example():
    enc = encode_supervision(labels=[1, 1, 2, 2])
    e1 = np.array([0.5, 0.5, 0, 0])
    j4 = np.full(4, 0.25)
    np.testing.assert_allclose(enc.Y[0], 2 * (e1 - j4))
    np.testing.assert_allclose(enc.Y.sum(axis=1), 0, atol=1e-15)
    assert enc.kind == "binary" and enc.r == 2


def test_encoding_kinds_and_errors():
    assert encode_supervision(labels=list("abcabc")).kind == "multicategory"
    enc = encode_supervision(response=[1.0, 2.0, 6.0])
    assert enc.kind == "continuous"
    np.testing.assert_allclose(enc.Y, [[-2.0, -1.0, 3.0]])
    with pytest.raises(InvalidLabelsError):
        encode_supervision(labels=[1, 1, 1])
    with pytest.raises(InvalidLabelsError):
        encode_supervision()


def test_three_point_binary_sb_spans_mean_difference(rng):
    X = rng.standard_normal((4, 3))
    labels = np.array([1, 2, 2])
    Xc, _ = center_columns(X)
    model = build_scatter(Xc, encode_supervision(labels=labels))
    Sb = model.between_full()
    d = X[:, 0] - X[:, 1:].mean(axis=1)
    vals, vecs = np.linalg.eigh(Sb)
    top = vecs[:, -1]
    assert vals[-2] < 1e-12 * vals[-1]
    assert abs(abs(top @ d) / np.linalg.norm(d) - 1) < 1e-10


def test_identity_scatter():
    n = 4
    X = np.sqrt(n) * np.array([[1, -1, 1, -1], [1, 1, -1, -1]]) / 2.0
    Xc, _ = center_columns(X)
    model = build_scatter(Xc, encode_supervision(labels=[0, 0, 1, 1]))
    np.testing.assert_allclose(model.lambdas, [1.0, 1.0])


def test_binary_sb_is_rank_one_in_reduced_space(rng):
    X = rng.standard_normal((2, 10))
    labels = np.repeat([0, 1], [4, 6])
    model, _, _ = fit_scatter(X, labels=labels)
    delta = model.d_reduced
    np.testing.assert_allclose(model.Sb_reduced, (4 * 6 / 100) * np.outer(delta, delta),
                               rtol=1e-10, atol=1e-14)


def test_hdlss_reconstruction_against_brute_force(rng):
    X = rng.standard_normal((100, 10))
    labels = np.repeat([0, 1], 5)
    model, _, _ = fit_scatter(X, labels=labels)
    St, _, Sb = brute_scatters(X, labels)
    assert model.m <= 9
    np.testing.assert_allclose(model.U.T @ model.U, np.eye(model.m), atol=1e-10)
    np.testing.assert_allclose(model.total_full(), St, atol=1e-8 * np.abs(St).max())
    np.testing.assert_allclose(model.between_full(), Sb, atol=1e-8 * np.abs(Sb).max())
    assert np.all(np.diff(model.lambdas) <= 0)
    np.testing.assert_allclose(model.d, X[:, :5].mean(axis=1) - X[:, 5:].mean(axis=1))


def test_identical_means_give_zero_between(rng):
    X = rng.standard_normal((3, 8))
    X = np.hstack([X, X])  # same sample in both classes
    labels = np.repeat([0, 1], 8)
    St, Sw, Sb = brute_scatters(X, labels)
    model, _, _ = fit_scatter(X, labels=labels)
    Xc = X - X.mean(axis=1, keepdims=True)
    np.testing.assert_allclose(within_scatter(Xc, labels), St, atol=1e-12)
    assert np.abs(model.Sb_reduced).max() < 1e-12


def test_within_scatter_rejects_singletons():
    with pytest.raises(InvalidLabelsError):
        within_scatter(np.zeros((2, 2)), [0, 1])


def test_zero_matrix_is_rank_zero():
    with pytest.raises(RankError):
        fit_scatter(np.ones((3, 6)), labels=np.repeat([0, 1], 3))


def test_dataset_validation():
    with pytest.raises(InvalidDataError):
        Dataset(np.array([[1.0, np.inf]]))
    with pytest.raises(InvalidLabelsError):
        Dataset(np.zeros((2, 3)), np.array([0, 0, 1])).require_class_sizes()
    with pytest.raises(InvalidLabelsError):
        Dataset(np.zeros((2, 3)), np.array([0, 0]))
    ds = Dataset(np.arange(8.0).reshape(2, 4), np.array([0, 1, 0, 1]))
    assert (ds.p, ds.n) == (2, 4)
    np.testing.assert_array_equal(ds.subset([0, 2]).X, [[0, 2], [4, 6]])
    np.testing.assert_allclose(class_means(ds.X, ds.labels), [[1, 2], [5, 6]])


def test_continuous_response_scatter(rng):
    X = rng.standard_normal((4, 12))
    y = rng.standard_normal(12)
    model, _, enc = fit_scatter(X, response=y)
    Xc = X - X.mean(axis=1, keepdims=True)
    v = Xc @ (y - y.mean())
    np.testing.assert_allclose(model.between_full(), np.outer(v, v) / 12, atol=1e-10)
    assert not model.is_binary


@settings(max_examples=40, deadline=None)
@given(p=st.integers(1, 8), sizes=st.lists(st.integers(2, 6), min_size=2, max_size=4),
       seed=st.integers(0, 2**32 - 1))
def test_total_equals_within_plus_between(p, sizes, seed):
    r = np.random.default_rng(seed)
    n = sum(sizes)
    X = r.standard_normal((p, n)) + r.standard_normal((p, 1))
    labels = np.repeat(np.arange(len(sizes)), sizes)
    model, mean, _ = fit_scatter(X, labels=labels)
    Xc = X - mean[:, None]
    St, Sw, Sb = brute_scatters(X, labels)
    scale = np.abs(St).max()
    np.testing.assert_allclose(St, Sw + Sb, atol=1e-10 * scale)
    np.testing.assert_allclose(within_scatter(Xc, labels), Sw, atol=1e-10 * scale)
    np.testing.assert_allclose(model.between_full(), Sb, atol=1e-8 * scale)
    Sw_r = within_scatter(Xc, labels, model.U)
    np.testing.assert_allclose(np.diag(model.lambdas), Sw_r + model.Sb_reduced, atol=1e-8 * scale)
