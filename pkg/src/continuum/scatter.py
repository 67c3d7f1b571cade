"""Centering, supervision coding and scatter matrices.

Everything downstream works in the reduced eigen-coordinates of the total
scatter ``S_T = U diag(lambdas) U^T``.  Data are stored column-per-observation:
``X`` has shape ``(p, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidDataError, InvalidLabelsError, RankError

#: Relative threshold below which eigenvalues of S_T are treated as zero.
EIG_RTOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Primary data matrix (p x n) with optional per-observation labels."""

    X: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2 or X.size == 0:
            raise InvalidDataError(f"X must be a non-empty 2-D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidDataError("X contains non-finite entries")
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != X.shape[1]:
                raise InvalidLabelsError(
                    f"expected {X.shape[1]} labels, got shape {labels.shape}")
            object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def classes(self) -> np.ndarray:
        if self.labels is None:
            raise InvalidLabelsError("dataset has no labels")
        return np.unique(self.labels)

    def require_class_sizes(self, minimum: int = 2) -> None:
        """Raise :class:`InvalidLabelsError` unless every class has ``minimum`` members."""
        _, counts = np.unique(self.labels if self.labels is not None else [], return_counts=True)
        if self.labels is None or np.any(counts < minimum):
            raise InvalidLabelsError(f"every class needs at least {minimum} observations")

    def subset(self, idx) -> "Dataset":
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.X[:, idx], labels)


@dataclass(frozen=True)
class SupervisionEncoding:
    """Centered r x n supervision matrix.

    ``row_weights`` rescale the rows when forming ``S_B``: ``1/n_k`` for
    categorical codings (so that ``S_B`` is the between-class scatter and
    ``S_T = S_W + S_B``), ones for continuous responses.
    """

    Y: np.ndarray
    kind: str
    classes: Optional[np.ndarray] = None
    row_weights: Optional[np.ndarray] = None

    @property
    def r(self) -> int:
        return self.Y.shape[0]


@dataclass(frozen=True)
class ScatterModel:
    """Total and supervision scatter in the reduced eigenspace of S_T.

    Attributes
    ----------
    U : (p, m) orthonormal eigenvectors of S_T with nonzero eigenvalues.
    lambdas : (m,) eigenvalues, nonincreasing.
    Sb_reduced : (m, m) ``U^T S_B U``.
    Sb_factor : (m, r) factor with ``Sb_reduced = Sb_factor @ Sb_factor.T``.
    d : (p,) mean difference ``xbar_1 - xbar_2`` (binary supervision only).
    d_reduced : (m,) ``U^T d`` (binary supervision only).
    """

    U: np.ndarray
    lambdas: np.ndarray
    Sb_reduced: np.ndarray
    Sb_factor: np.ndarray
    n: int
    d: Optional[np.ndarray] = None
    d_reduced: Optional[np.ndarray] = None
    class_sizes: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.lambdas.shape[0]

    @property
    def p(self) -> int:
        return self.U.shape[0]

    @property
    def trace_total(self) -> float:
        return float(self.lambdas.sum())

    @property
    def lambda1(self) -> float:
        return float(self.lambdas[0])

    @property
    def is_binary(self) -> bool:
        return self.d_reduced is not None

    def to_full(self, z: np.ndarray) -> np.ndarray:
        """Map reduced coordinates (m,) or (m, k) back to R^p."""
        return self.U @ z

    def total_full(self) -> np.ndarray:
        return (self.U * self.lambdas) @ self.U.T

    def between_full(self) -> np.ndarray:
        return self.U @ self.Sb_reduced @ self.U.T


def center_columns(X):
    """Subtract the row means of a p x n matrix.

    Returns the centered matrix and the mean vector (length p).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidDataError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[1] < 2:
        raise InvalidDataError("need at least 2 observations to center")
    if not np.all(np.isfinite(X)):
        raise InvalidDataError("X contains non-finite entries")
    mean = X.mean(axis=1)
    return X - mean[:, None], mean


def encode_supervision(labels=None, response=None) -> SupervisionEncoding:
    """Build the centered supervision matrix Y.

    Exactly one of ``labels`` (categorical, length n) or ``response``
    (continuous, r x n or length n) must be given.  For K classes, row k of Y
    is ``n_k (e_k - j_n)``, i.e. the class indicator minus ``n_k / n``.
    Continuous responses are centered per row but not rescaled.
    """
    if (labels is None) == (response is None):
        raise InvalidLabelsError("give exactly one of labels or response")

    if response is not None:
        R = np.atleast_2d(np.asarray(response, dtype=float))
        if not np.all(np.isfinite(R)):
            raise InvalidDataError("response contains non-finite entries")
        Y = R - R.mean(axis=1, keepdims=True)
        return SupervisionEncoding(Y, "continuous", None, np.ones(Y.shape[0]))

    labels = np.asarray(labels)
    classes, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if classes.shape[0] < 2:
        raise InvalidLabelsError(f"need at least 2 classes, got {classes.shape[0]}")
    n = labels.shape[0]
    K = classes.shape[0]
    indicator = (inverse[None, :] == np.arange(K)[:, None]).astype(float)
    Y = indicator - counts[:, None] / n
    kind = "binary" if K == 2 else "multicategory"
    return SupervisionEncoding(Y, kind, classes, 1.0 / counts)


def _reduced_eigenspace(Xc):
    n = Xc.shape[1]
    if not np.any(Xc):
        raise RankError("centered data matrix is zero; S_T has rank 0")
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    lambdas = s**2 / n
    keep = lambdas > EIG_RTOL * lambdas[0]
    return U[:, keep], lambdas[keep], s[keep], Vt[keep]


def build_scatter(Xc, encoding) -> ScatterModel:
    """Reduced representation of ``S_T = XX^T/n`` and ``S_B = (XY^T)W(XY^T)^T/n``.

    ``Xc`` must already be centered.  ``encoding`` is a
    :class:`SupervisionEncoding` or a raw (continuous) Y matrix.  The
    eigenspace comes from the thin SVD of ``Xc``, so no p x p matrix is formed.
    """
    Xc = np.asarray(Xc, dtype=float)
    if not isinstance(encoding, SupervisionEncoding):
        Y = np.atleast_2d(np.asarray(encoding, dtype=float))
        encoding = SupervisionEncoding(Y, "continuous", None, np.ones(Y.shape[0]))
    Y = encoding.Y
    if Y.shape[1] != Xc.shape[1]:
        raise InvalidDataError(
            f"Y has {Y.shape[1]} columns but X has {Xc.shape[1]} observations")
    n = Xc.shape[1]

    U, lambdas, s, Vt = _reduced_eigenspace(Xc)
    # U^T X Y^T = diag(s) V^T Y^T
    G = (s[:, None] * (Vt @ Y.T)) * np.sqrt(encoding.row_weights)[None, :] / np.sqrt(n)
    Sb = G @ G.T
    Sb = 0.5 * (Sb + Sb.T)

    d = d_red = sizes = None
    if encoding.classes is not None:
        sizes = np.rint(1.0 / encoding.row_weights).astype(int)
    if encoding.kind == "binary":
        ind = Y > 0  # rows are indicator - n_k/n
        d = Xc[:, ind[0]].mean(axis=1) - Xc[:, ind[1]].mean(axis=1)
        d_red = U.T @ d
    return ScatterModel(U, lambdas, Sb, G, n, d, d_red, sizes)


def fit_scatter(X, labels=None, response=None):
    """Center ``X`` and build its scatter model in one step.

    Returns ``(model, mean, encoding)``.
    """
    Xc, mean = center_columns(X)
    enc = encode_supervision(labels=labels, response=response)
    return build_scatter(Xc, enc), mean, enc


def within_scatter(Xc, labels, U: Optional[np.ndarray] = None) -> np.ndarray:
    """Pooled within-class scatter ``S_W`` with divisor n.

    If ``U`` is given the result is returned in reduced coordinates
    ``U^T S_W U``; otherwise as a full p x p matrix.
    """
    Xc = np.asarray(Xc, dtype=float)
    labels = np.asarray(labels)
    classes, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if np.any(counts < 2):
        raise InvalidLabelsError("every class needs at least 2 observations for S_W")
    means = np.stack([Xc[:, inverse == k].mean(axis=1) for k in range(classes.shape[0])], axis=1)
    R = Xc - means[:, inverse]
    if U is not None:
        R = U.T @ R
    Sw = R @ R.T / Xc.shape[1]
    return 0.5 * (Sw + Sw.T)


def class_means(X, labels: Sequence, classes=None) -> np.ndarray:
    """Per-class column means, shape (p, K), in ``classes`` order."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    if classes is None:
        classes = np.unique(labels)
    return np.stack([X[:, labels == c].mean(axis=1) for c in classes], axis=1)
