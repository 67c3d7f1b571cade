"""Continuum discriminant analysis and baseline linear classifiers.

CDA projects observations onto a continuum basis with ``K - 1`` directions
and runs ordinary Gaussian LDA on the resulting scores.  Observations are
columns of a ``p x n`` matrix throughout.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ._json import dumps, jsonable
from .binary import lda_direction, md_direction, mdp_direction
from .errors import ConfigError, FitError, InvalidDataError
from .scatter import Dataset, ScatterModel, class_means, fit_scatter, within_scatter
from .solver import ContinuumBasis, SolverConfig, continuum_bases

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

#: Ridge added to the pooled score covariance, relative to the total score variance.
SCORE_COV_RIDGE = 1e-10
#: Relative gap under which two discriminant values count as tied.
TIE_RTOL = 1e-12

BASELINE_KINDS = ("MD", "MDP", "LDA", "centroid")


def _as_columns(X, p: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != p:
        raise InvalidDataError(f"expected {p} rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidDataError("input contains non-finite entries")
    return X


def _first_max(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax, resolving near-ties to the lowest column index."""
    top = scores.max(axis=1, keepdims=True)
    tol = TIE_RTOL * np.maximum(np.abs(scores).max(axis=1, keepdims=True), 1.0)
    return np.argmax(scores >= top - tol, axis=1)


def project_scores(basis, center, X) -> np.ndarray:
    """Scores ``W'(x - center)`` as an ``n x kappa`` matrix.

    ``basis`` is a :class:`ContinuumBasis` or a ``p x kappa`` array.
    """
    W = basis.W if isinstance(basis, ContinuumBasis) else np.asarray(basis, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    center = np.asarray(center, dtype=float)
    X = _as_columns(X, W.shape[0])
    if center.shape != (W.shape[0],):
        raise InvalidDataError(f"center must have length {W.shape[0]}")
    return (X - center[:, None]).T @ W


@dataclass(frozen=True)
class CdaModel:
    """Fitted continuum discriminant.

    Attributes
    ----------
    basis : ContinuumBasis
        Directions used for the scores (``kappa = K - 1``).
    center : (p,) training mean.
    classes : (K,) sorted class labels.
    score_means : (K, kappa) class means of the training scores.
    score_cov : (kappa, kappa) pooled within-class score covariance.
    priors : (K,) class prior probabilities.
    """

    basis: ContinuumBasis
    center: np.ndarray
    classes: np.ndarray
    score_means: np.ndarray
    score_cov: np.ndarray
    priors: np.ndarray

    @property
    def gamma(self) -> float:
        return self.basis.gamma

    @property
    def kappa(self) -> int:
        return self.basis.kappa

    def scores(self, X) -> np.ndarray:
        return project_scores(self.basis, self.center, X)

    def decision_function(self, X) -> np.ndarray:
        """Linear discriminants ``z'S^-1 m_k - m_k'S^-1 m_k / 2 + log pi_k`` (n x K)."""
        Z = self.scores(X)
        A = np.linalg.solve(self.score_cov, self.score_means.T)  # kappa x K
        const = -0.5 * np.einsum("kj,jk->k", self.score_means, A)
        with np.errstate(divide="ignore"):
            logp = np.log(self.priors)
        return Z @ A + const + logp

    def predict(self, X) -> np.ndarray:
        """Predicted labels for the columns of ``X`` (or a single p-vector)."""
        return self.classes[_first_max(self.decision_function(X))]

    def to_dict(self) -> Dict:
        b = self.basis
        return {
            "format_version": FORMAT_VERSION,
            "kind": "cda",
            "gamma": float(b.gamma),
            "classes": np.asarray(self.classes).tolist(),
            "center": self.center.tolist(),
            "directions": b.W.T.tolist(),
            "criterion_values": jsonable(np.asarray(b.criterion_values, dtype=float)),
            "iterations": list(b.iterations),
            "converged": list(b.converged),
            "score_means": self.score_means.tolist(),
            "score_cov": self.score_cov.tolist(),
            "priors": self.priors.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: Dict) -> "CdaModel":
        version = doc.get("format_version")
        if version != FORMAT_VERSION or doc.get("kind") != "cda":
            raise ConfigError(f"unsupported model document (format_version={version!r})")
        W = np.asarray(doc["directions"], dtype=float).T
        basis = ContinuumBasis(float(doc["gamma"]), W, None,
                               np.array([float(v) for v in doc.get("criterion_values", [])]),
                               list(doc.get("iterations", [])), [],
                               list(doc.get("converged", [])))
        return cls(basis, np.asarray(doc["center"], dtype=float), np.asarray(doc["classes"]),
                   np.asarray(doc["score_means"], dtype=float),
                   np.asarray(doc["score_cov"], dtype=float),
                   np.asarray(doc["priors"], dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "CdaModel":
        return cls.from_dict(json.loads(text))


def _priors(labels, classes, kind: str) -> np.ndarray:
    if kind == "empirical":
        counts = np.array([np.sum(labels == c) for c in classes], dtype=float)
        return counts / counts.sum()
    if kind == "uniform":
        return np.full(len(classes), 1.0 / len(classes))
    raise ConfigError(f"priors must be 'empirical' or 'uniform', got {kind!r}")


def cda_from_basis(dataset: Dataset, basis: ContinuumBasis, center=None,
                   priors: str = "empirical") -> CdaModel:
    """Train the score-space LDA for a given basis.

    The pooled score covariance uses divisor ``n - K``.  A ridge of
    ``SCORE_COV_RIDGE * trace(total score covariance)`` keeps it invertible
    when the scores pile up within classes.

    Raises
    ------
    FitError
        if the scores carry no variance at all.
    """
    X, labels = dataset.X, dataset.labels
    classes = dataset.classes
    K, n = len(classes), dataset.n
    if n <= K:
        raise FitError("need more observations than classes for the pooled covariance")
    if center is None:
        center = X.mean(axis=1)
    Z = project_scores(basis, center, X)
    means = np.stack([Z[labels == c].mean(axis=0) for c in classes])
    R = Z - means[np.searchsorted(classes, labels)]
    S = R.T @ R / (n - K)
    Zc = Z - Z.mean(axis=0)
    total = np.trace(Zc.T @ Zc) / (n - 1)
    if not np.all(np.isfinite(S)) or not total > 0:
        raise FitError("score covariance is degenerate; try a larger gamma or fewer directions")
    S = 0.5 * (S + S.T) + SCORE_COV_RIDGE * total * np.eye(S.shape[0])
    cond = np.linalg.cond(S)
    log.debug("score covariance condition number %.3g", cond)
    if not np.isfinite(cond):
        raise FitError("score covariance is singular; try a larger gamma or fewer directions")
    return CdaModel(basis, np.asarray(center, dtype=float), classes, means, S,
                    _priors(labels, classes, priors))


def _mdp_basis(model: ScatterModel) -> ContinuumBasis:
    w = mdp_direction(model)
    z = model.U.T @ w
    return ContinuumBasis(0.0, w[:, None], z[:, None], np.array([np.inf]), [0], [0.0], [True])


def fit_cda_grid(dataset: Dataset, gammas: Sequence[float],
                 config: Optional[SolverConfig] = None, priors: str = "empirical",
                 allow_unconverged: bool = False) -> List[CdaModel]:
    """Fit one CDA model per gamma, sharing the scatter model and the solver batch.

    With binary labels, ``gamma = 0`` uses the exact maximal data piling
    direction instead of the solver's small-gamma surrogate.
    """
    if dataset.labels is None:
        raise InvalidDataError("CDA needs class labels")
    dataset.require_class_sizes()
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    model, mean, enc = fit_scatter(dataset.X, labels=dataset.labels)
    kappa = len(enc.classes) - 1
    if kappa > model.m:
        raise FitError(f"rank(S_T)={model.m} is below K-1={kappa}")
    exact = (gammas == 0) & model.is_binary
    bases: List[Optional[ContinuumBasis]] = [None] * len(gammas)
    if exact.any():
        mdp = _mdp_basis(model)
        for i in np.flatnonzero(exact):
            bases[i] = mdp
    rest = np.flatnonzero(~exact)
    if rest.size:
        solved = continuum_bases(model, gammas[rest], kappa, config, allow_unconverged)
        for i, b in zip(rest, solved):
            bases[i] = b
    return [cda_from_basis(dataset, b, mean, priors) for b in bases]


def fit_cda(dataset: Dataset, gamma: float, config: Optional[SolverConfig] = None,
            priors: str = "empirical") -> CdaModel:
    """Fit CDA at a single gamma.

    Examples
    --------
    >>> rng = np.random.default_rng(0)
    >>> X = np.hstack([rng.normal(-3, 1, (2, 20)), rng.normal(3, 1, (2, 20))])
    >>> y = np.repeat([0, 1], 20)
    >>> m = fit_cda(Dataset(X, y), gamma=0.5)
    >>> bool(np.all(m.predict(X) == y))
    True
    """
    return fit_cda_grid(dataset, [gamma], config, priors)[0]


def predict(model: CdaModel, X) -> np.ndarray:
    """Labels predicted by a fitted CDA model."""
    return model.predict(X)


@dataclass(frozen=True)
class BaselineModel:
    """Direction-based (MD, MDP, LDA) or nearest-centroid classifier.

    Direction rules assign class ``classes[0]`` when
    ``w'x - threshold >= 0``; ``w`` points from the second class mean to the
    first.
    """

    kind: str
    classes: np.ndarray
    direction: Optional[np.ndarray] = None
    threshold: Optional[float] = None
    centroids: Optional[np.ndarray] = field(default=None, repr=False)

    def predict(self, X) -> np.ndarray:
        if self.kind == "centroid":
            X = _as_columns(X, self.centroids.shape[0])
            d2 = ((X[:, :, None] - self.centroids[:, None, :]) ** 2).sum(axis=0)
            return self.classes[_first_max(-d2)]
        X = _as_columns(X, self.direction.shape[0])
        s = self.direction @ X - self.threshold
        return np.where(s >= 0, self.classes[0], self.classes[1])


def fit_baseline(dataset: Dataset, kind: str) -> BaselineModel:
    """Fit a baseline classifier of the given ``kind``.

    ``kind`` is one of ``"MD"``, ``"MDP"``, ``"LDA"`` (pseudo-inverse of the
    within-class scatter) or ``"centroid"``.  The direction kinds need two
    classes.
    """
    if kind not in BASELINE_KINDS:
        raise ConfigError(f"unknown baseline {kind!r}; choose from {BASELINE_KINDS}")
    if dataset.labels is None:
        raise InvalidDataError("baselines need class labels")
    dataset.require_class_sizes()
    classes = dataset.classes
    means = class_means(dataset.X, dataset.labels, classes)
    if kind == "centroid":
        return BaselineModel(kind, classes, centroids=means)
    if len(classes) != 2:
        raise ConfigError(f"{kind} baseline supports two classes, got {len(classes)}")

    model, mean, _ = fit_scatter(dataset.X, labels=dataset.labels)
    if kind == "MD":
        w = md_direction(model)
    elif kind == "MDP":
        w = mdp_direction(model)
    else:
        Xc = dataset.X - mean[:, None]
        Sw = within_scatter(Xc, dataset.labels, model.U)
        w = model.U @ lda_direction(Sw, model.d_reduced)
    threshold = float(w @ (means[:, 0] + means[:, 1]) / 2)
    return BaselineModel(kind, classes, direction=w, threshold=threshold)


def predict_baseline(model: BaselineModel, X) -> np.ndarray:
    return model.predict(X)
