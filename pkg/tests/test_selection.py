import numpy as np
import pytest

from continuum.classifier import fit_cda
from continuum.errors import ConfigError, StratificationError
from continuum.scatter import Dataset
from continuum.selection import cv_gamma, default_gamma_grid, stratified_folds
from continuum.simulation import SimConfig, _draw


def test_default_grid():
    g = default_gamma_grid()
    assert g[0] == 0 and g.size == 31
    assert g[1] == pytest.approx(0.01) and g[-1] == pytest.approx(10.0)
    assert np.all(np.diff(g) > 0)


def test_folds_are_stratified_and_cover_everything(rng):
    labels = np.repeat(["a", "b", "c"], [23, 31, 12])
    assign = stratified_folds(labels, 10, seed=3)
    assert set(assign) == set(range(10))
    for c in np.unique(labels):
        counts = np.bincount(assign[labels == c], minlength=10)
        share = np.sum(labels == c) / 10
        assert np.all(np.abs(counts - share) < 1)
    np.testing.assert_array_equal(assign, stratified_folds(labels, 10, seed=3))
    assert not np.array_equal(assign, stratified_folds(labels, 10, seed=4))


def test_small_class_raises():
    with pytest.raises(StratificationError):
        stratified_folds(np.repeat([0, 1], [20, 4]), 5)
    with pytest.raises(ConfigError):
        stratified_folds(np.repeat([0, 1], 5), 1)


def test_bad_grids_rejected(rng):
    ds = Dataset(rng.standard_normal((2, 20)), np.repeat([0, 1], 10))
    for grid in ([], [1.0, 0.5], [-1.0, 1.0], [0.0, np.inf]):
        with pytest.raises(ConfigError):
            cv_gamma(ds, grid, folds=5)


def test_separable_data_picks_smallest_gamma(rng):
    X = np.hstack([rng.normal(-6, 1, (4, 20)), rng.normal(6, 1, (4, 20))])
    rep = cv_gamma(Dataset(X, np.repeat([0, 1], 20)), [0.0, 0.3, 1.0, 4.0], folds=5)
    np.testing.assert_array_equal(rep.cv_error, 0)
    assert rep.chosen_gamma == 0.0


def test_cv_matches_naive_loop(rng):
    X = rng.standard_normal((15, 36))
    y = np.repeat([0, 1, 2], 12)
    X[:, y == 1] += 0.6
    X[:3, y == 2] -= 0.8
    ds = Dataset(X, y)
    grid = [0.0, 0.1, 0.5, 2.0]
    rep = cv_gamma(ds, grid, folds=4, seed=7)
    assign = stratified_folds(y, 4, seed=7)
    np.testing.assert_array_equal(rep.fold_assignment, assign)
    naive = []
    for g in grid:
        wrong = 0
        for f in range(4):
            tr, te = assign != f, assign == f
            m = fit_cda(Dataset(X[:, tr], y[tr]), g)
            wrong += np.sum(m.predict(X[:, te]) != y[te])
        naive.append(wrong / 36)
    np.testing.assert_allclose(rep.cv_error, naive)
    best = min(naive)
    assert rep.chosen_gamma == grid[naive.index(best)]
    assert 0 <= rep.cv_error.min() and rep.cv_error.max() <= 1


def test_cv_is_deterministic(rng):
    X = rng.standard_normal((10, 40))
    y = np.repeat([0, 1], 20)
    X[:, :20] += 0.5
    ds = Dataset(X, y)
    a = cv_gamma(ds, [0.0, 0.5, 2.0], folds=5, seed=11)
    b = cv_gamma(ds, [0.0, 0.5, 2.0], folds=5, seed=11)
    assert a.to_json() == b.to_json()


def test_tie_break_is_smallest_minimizer(rng):
    X = rng.standard_normal((6, 30))
    y = np.repeat([0, 1], 15)
    X[0, :15] += 1.0
    rep = cv_gamma(Dataset(X, y), default_gamma_grid(), folds=5, seed=2)
    minimizers = rep.gamma_grid[rep.cv_error == rep.cv_error.min()]
    assert rep.chosen_gamma == minimizers[0]


@pytest.mark.parametrize("seed", range(4))
def test_pure_noise_is_near_chance(seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((50, 100))
    y = np.repeat([0, 1], 50)
    rep = cv_gamma(Dataset(X, y), seed=seed)
    assert np.all(np.abs(rep.cv_error - 0.5) <= 0.15)


@pytest.mark.slow
def test_cv_curve_is_u_shaped_under_compound_symmetry():
    hits = 0
    for seed in range(10):
        ds = _draw(SimConfig(rho=0.5, s=10), np.random.default_rng(seed), 50)
        e = cv_gamma(ds, seed=seed).cv_error
        hits += bool(e[1:-1].min() < min(e[0], e[-1]))
    assert hits >= 8
