"""Stratified K-fold cross-validation of the CDA tuning parameter."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from ._json import dumps
from .classifier import fit_cda_grid
from .errors import ConfigError, InvalidDataError, StratificationError
from .scatter import Dataset
from .solver import SolverConfig

log = logging.getLogger(__name__)


def default_gamma_grid() -> np.ndarray:
    """``{0}`` together with 30 log-spaced values in ``[0.01, 10]``."""
    return np.concatenate([[0.0], np.logspace(-2, 1, 30)])


def stratified_folds(labels, folds: int, seed: int = 0) -> np.ndarray:
    """Assign every observation to one of ``folds`` validation folds.

    Each class is shuffled with a seeded generator; the shuffled classes are
    concatenated and dealt out round-robin, so per-fold class counts differ
    by at most one.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise ConfigError("folds must be at least 2")
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < folds]
    if small.size:
        raise StratificationError(
            f"classes {small.tolist()} have fewer than {folds} observations")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in classes])
    assignment = np.empty(labels.shape[0], dtype=int)
    assignment[order] = np.arange(order.shape[0]) % folds
    return assignment


@dataclass(frozen=True)
class CvReport:
    """Cross-validation errors over a gamma grid.

    ``cv_error[j]`` is the number of misclassified held-out observations at
    ``gamma_grid[j]`` divided by n.  ``chosen_gamma`` is the smallest grid value
    attaining the minimum.
    """

    gamma_grid: np.ndarray
    cv_error: np.ndarray
    chosen_gamma: float
    fold_assignment: np.ndarray
    seed: int
    unconverged: int = 0

    @property
    def folds(self) -> int:
        return int(self.fold_assignment.max()) + 1

    def to_dict(self) -> Dict:
        return {
            "gamma_grid": self.gamma_grid,
            "cv_error": self.cv_error,
            "chosen_gamma": self.chosen_gamma,
            "folds": self.folds,
            "seed": self.seed,
            "fold_assignment": self.fold_assignment,
            "unconverged": self.unconverged,
        }

    def to_json(self, **kwargs) -> str:
        return dumps(self.to_dict(), **kwargs)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigError("gamma grid must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(grid)) or np.any(grid < 0):
        raise ConfigError("gamma grid values must be finite and nonnegative")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("gamma grid must be strictly increasing")
    return grid


def cv_gamma(dataset: Dataset, gamma_grid: Optional[Sequence[float]] = None, folds: int = 10,
             seed: int = 0, config: Optional[SolverConfig] = None) -> CvReport:
    """Choose gamma by stratified ``folds``-fold cross-validation.

    Directions that hit the iteration cap keep their best iterate (a warning
    is logged and the count is reported) rather than aborting the fold.

    Examples
    --------
    >>> rng = np.random.default_rng(1)
    >>> X = np.hstack([rng.normal(-4, 1, (3, 20)), rng.normal(4, 1, (3, 20))])
    >>> rep = cv_gamma(Dataset(X, np.repeat([0, 1], 20)), [0.1, 1.0, 5.0], folds=5)
    >>> rep.chosen_gamma, float(rep.cv_error.max())
    (0.1, 0.0)
    """
    if dataset.labels is None:
        raise InvalidDataError("cross-validation needs class labels")
    grid = default_gamma_grid() if gamma_grid is None else _check_grid(gamma_grid)
    assignment = stratified_folds(dataset.labels, folds, seed)
    wrong = np.zeros(grid.shape[0], dtype=int)
    unconverged = 0
    for f in range(folds):
        test = assignment == f
        train = dataset.subset(np.flatnonzero(~test))
        models = fit_cda_grid(train, grid, config, allow_unconverged=True)
        X_test, y_test = dataset.X[:, test], dataset.labels[test]
        for j, m in enumerate(models):
            wrong[j] += int(np.sum(m.predict(X_test) != y_test))
            unconverged += int(not all(m.basis.converged))
    err = wrong / dataset.n
    chosen = float(grid[np.flatnonzero(wrong == wrong.min())[0]])
    if unconverged:
        log.warning("%d fold/gamma fits stopped at the iteration cap", unconverged)
    return CvReport(grid, err, chosen, assignment, int(seed), unconverged)
