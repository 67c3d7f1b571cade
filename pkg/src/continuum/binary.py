"""Continuum directions for rank-one supervision via the ridge form.

For binary supervision every continuum direction is (up to scale)
``(S_T + alpha I)^- d`` for some ``alpha`` in ``(-inf, -lambda_1] U [0, inf)``,
with ``gamma(alpha) = alpha / (w'S_T w + alpha)``.  Everything here is
computed in the reduced eigen-coordinates, where the shifted inverse is
diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import (ConfigError, DegenerateMeansError, NotApplicableError,
                     RankError, SingularShiftError)
from .scatter import EIG_RTOL, ScatterModel
from .solver import criterion

#: Offset of the negative-branch grid from -lambda_1, as a fraction of lambda_1.
NEG_BRANCH_EPS = 0.01
#: Relative gap under which eigenvalues count as equal to lambda_1.
DUPLICITY_RTOL = 1e-8


@dataclass(frozen=True)
class PathPoint:
    """One continuum direction on the binary path.

    ``alpha`` is ``+inf`` for the MD point (gamma = 1) and ``-lambda_1`` for
    the PCA point (gamma = inf).  For the PCA point ``criterion_value`` holds
    ``w'S_T w``, the limit criterion.
    """

    gamma: float
    alpha: float
    w: np.ndarray
    criterion_value: float
    kind: str = "ridge"


@dataclass(frozen=True)
class ContinuumPath:
    points: Tuple[PathPoint, ...]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([pt.gamma for pt in self.points])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([pt.alpha for pt in self.points])

    @property
    def W(self) -> np.ndarray:
        return np.column_stack([pt.w for pt in self.points])

    def _find(self, kind):
        return next(pt for pt in self.points if pt.kind == kind)

    @property
    def mdp(self) -> PathPoint:
        return self._find("MDP")

    @property
    def md(self) -> PathPoint:
        return self._find("MD")

    @property
    def pca(self) -> PathPoint:
        return self._find("PCA")


def _delta(model: ScatterModel) -> np.ndarray:
    if not model.is_binary:
        raise NotApplicableError("binary path needs rank-one (binary) supervision")
    delta = model.d_reduced
    if not np.any(np.abs(delta) > 1e-13 * math.sqrt(model.lambda1)):
        raise DegenerateMeansError("class means coincide (d = 0)")
    return delta


def _unit(v):
    return v / np.linalg.norm(v)


def _orient(z, delta):
    return -z if float(delta @ z) < 0 else z


def _reduced_criterion(model, z, gamma):
    if math.isinf(gamma):
        return float(np.sum(model.lambdas * z**2) / (z @ z))
    return criterion(z, model.Sb_reduced, np.diag(model.lambdas), gamma)


def mdp_direction(model: ScatterModel) -> np.ndarray:
    """Maximal data piling direction ``S_T^- d``, unit length."""
    delta = _delta(model)
    return model.to_full(_unit(delta / model.lambdas))


def md_direction(model: ScatterModel) -> np.ndarray:
    """Mean difference direction ``d / ||d||``."""
    _delta(model)
    return _unit(model.d)


def pseudo_inverse(A, rtol: float = EIG_RTOL) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix with eigenvalue clamping."""
    lam, V = np.linalg.eigh(0.5 * (A + A.T))
    top = lam.max()
    if not top > 0:
        raise RankError("matrix has no positive eigenvalues")
    keep = lam > rtol * top
    return (V[:, keep] / lam[keep]) @ V[:, keep].T


def lda_direction(Sw, d) -> np.ndarray:
    """Pseudo-inverse LDA direction ``S_W^- d``, unit length, ``d'w >= 0``.

    ``Sw`` and ``d`` may be in any common coordinate system (for example the
    reduced coordinates of a scatter model).
    """
    d = np.asarray(d, dtype=float)
    if not np.any(d):
        raise DegenerateMeansError("class means coincide (d = 0)")
    w = pseudo_inverse(np.asarray(Sw, dtype=float)) @ d
    nrm = np.linalg.norm(w)
    if nrm <= 1e-300:
        raise RankError("d is orthogonal to range(S_W); LDA direction undefined")
    return _orient(w / nrm, d)


def _ridge_reduced(lambdas, delta, alpha):
    if math.isinf(alpha):
        return _unit(delta)
    shifted = lambdas + alpha
    tol = np.finfo(float).eps * max(lambdas[0], abs(alpha))
    hit = (np.abs(shifted) <= tol) & (delta != 0)
    if np.any(hit):
        raise SingularShiftError(f"alpha = {alpha!r} equals -lambda_i for a retained eigenvalue")
    z = np.where(delta == 0, 0.0, delta / np.where(shifted == 0, 1.0, shifted))
    return _orient(_unit(z), delta)


def ridge_direction(model: ScatterModel, alpha: float) -> np.ndarray:
    """Ridge direction ``(S_T + alpha I)^- d`` normalized, with ``d'w >= 0``.

    ``alpha = +-inf`` returns the mean-difference limit.
    """
    delta = _delta(model)
    if -model.lambda1 < alpha < 0:
        raise ConfigError("alpha in (-lambda_1, 0) does not give a continuum direction")
    return model.to_full(_ridge_reduced(model.lambdas, delta, alpha))


def gamma_of_alpha(alpha: float, w, model: ScatterModel) -> float:
    """``gamma = alpha / (w'S_T w + alpha)`` for unit ``w``."""
    if math.isinf(alpha):
        return 1.0
    z = model.U.T @ np.asarray(w, dtype=float)
    q = float(np.sum(model.lambdas * z**2))
    den = q + alpha
    if abs(den) <= np.finfo(float).eps * max(abs(q), abs(alpha), 1e-300):
        raise SingularShiftError("w'S_T w + alpha = 0")
    return alpha / den


def _gamma_reduced(lambdas, z, alpha):
    if math.isinf(alpha):
        return 1.0
    return alpha / (float(np.sum(lambdas * z**2)) + alpha)


def pc1_direction(model: ScatterModel) -> np.ndarray:
    """First principal direction, oriented so ``d'w >= 0``.

    Without a usable ``d`` (or with ``d`` orthogonal to it) the first nonzero
    coordinate is made positive.
    """
    if not model.lambda1 > 0:
        raise RankError("S_T is zero")
    u = model.U[:, 0].copy()
    if model.is_binary and abs(model.d_reduced[0]) > 1e-13 * np.linalg.norm(model.d_reduced):
        return -u if model.d_reduced[0] < 0 else u
    first = u[np.flatnonzero(np.abs(u) > 1e-14)[0]]
    return -u if first < 0 else u


def _top_group(lambdas) -> int:
    return int(np.sum(lambdas >= lambdas[0] * (1 - DUPLICITY_RTOL)))


def is_rare_case(model: ScatterModel) -> bool:
    """True when d is orthogonal to the whole top eigenspace of S_T."""
    delta = _delta(model)
    iota = _top_group(model.lambdas)
    return bool(np.all(np.abs(delta[:iota]) <= 1e-10 * np.linalg.norm(delta)))


@dataclass(frozen=True)
class RareCaseSolution:
    """Maximizers of T_gamma when d is orthogonal to the top eigenspace.

    Case ``"i"`` has a unique direction of ridge form with zero weight on the
    top eigenspace.  In case ``"ii"`` the maximizers are every
    ``U [z1; z_complement]`` with ``||z1|| = radius``; ``directions`` lists one
    representative per top eigenvector.
    """

    case: str
    gamma: float
    alpha: float
    directions: List[np.ndarray]
    radius: float
    z_complement: np.ndarray
    top_basis: np.ndarray
    complement_basis: np.ndarray

    def member(self, z1) -> np.ndarray:
        z1 = np.asarray(z1, dtype=float).reshape(-1)
        if self.case != "ii":
            raise NotApplicableError("case (i) has a single solution")
        if not math.isclose(float(np.linalg.norm(z1)), self.radius, rel_tol=1e-9, abs_tol=1e-12):
            raise ConfigError(f"||z1|| must equal the radius {self.radius}")
        return self.top_basis @ z1 + self.complement_basis @ self.z_complement


def _rare_parts(model):
    delta = _delta(model)
    lam = model.lambdas
    iota = _top_group(lam)
    nrm = np.linalg.norm(delta)
    if np.any(np.abs(delta[:iota]) > 1e-10 * nrm):
        raise NotApplicableError(
            "d is not orthogonal to the top eigenspace; use binary_path or ridge_direction")
    if iota == lam.shape[0]:
        raise NotApplicableError("S_T has a single eigenvalue group")
    lam2, delta2 = lam[iota:], delta[iota:].copy()
    delta2[np.abs(delta2) <= 1e-10 * nrm] = 0.0
    nxt = np.abs(lam2 - lam2[0]) <= DUPLICITY_RTOL * lam[0]
    if not np.any(delta2[nxt] != 0):
        raise NotApplicableError(
            "d is also orthogonal to the eigenvectors of the next eigenvalue")
    return iota, lam[0], lam2, delta2


def _critical_gamma(lam1, lam2, delta2):
    z = _unit(delta2 / (lam2 - lam1))
    q = float(z @ ((lam1 - lam2) * z))
    return lam1 / q, z


def _solve_alpha(lam2, delta2, gamma, lam1):
    """Ridge parameter on the complement eigenspace with gamma(alpha) = gamma."""
    def f(a):
        return _gamma_reduced(lam2, _ridge_reduced(lam2, delta2, a), a) - gamma

    if gamma == 0:
        return 0.0
    if gamma == 1:
        return math.inf
    if gamma < 1:
        hi = lam1
        while f(hi) < 0:
            hi *= 2.0
        return brentq(f, 0.0, hi, xtol=1e-14 * hi, rtol=1e-15, maxiter=500)
    # gamma(alpha) falls from gamma_crit at -lambda_1 towards 1 as alpha -> -inf
    hi = -lam1
    if f(hi) <= 0:
        return hi
    span = lam1
    while f(hi - span) > 0:
        span *= 2.0
    return brentq(f, hi - span, hi, xtol=1e-14 * span, rtol=1e-15, maxiter=500)


def rare_case_direction(model: ScatterModel, gamma: float) -> RareCaseSolution:
    """Analytic maximizer(s) of T_gamma when d is orthogonal to the top eigenspace.

    Raises :class:`NotApplicableError` when the ridge form already covers the
    data (d has a component along the leading eigenvectors).
    """
    if gamma < 0:
        raise ConfigError("gamma must be nonnegative")
    iota, lam1, lam2, delta2 = _rare_parts(model)
    U1, U2 = model.U[:, :iota], model.U[:, iota:]
    g_crit, _ = _critical_gamma(lam1, lam2, delta2)

    if gamma <= g_crit:
        alpha = _solve_alpha(lam2, delta2, gamma, lam1)
        z2 = _ridge_reduced(lam2, delta2, alpha)
        return RareCaseSolution("i", float(gamma), alpha, [U2 @ z2], 0.0, z2, U1, U2)

    q = float(delta2 @ (delta2 / (lam1 - lam2)))
    z2 = math.sqrt(lam1 / gamma) * (delta2 / (lam1 - lam2)) / math.sqrt(q)
    z2 = _orient(z2, delta2)
    radius = math.sqrt(max(0.0, 1.0 - float(z2 @ z2)))
    s = 1.0 if pc1_direction(model) @ model.U[:, 0] >= 0 else -1.0
    reps = []
    for j in range(iota):
        z1 = np.zeros(iota)
        z1[j] = s * radius if j == 0 else radius
        reps.append(U1 @ z1 + U2 @ z2)
    return RareCaseSolution("ii", float(gamma), -lam1, reps, radius, z2, U1, U2)


def _alpha_for_gamma(lam, delta, gamma):
    """Ridge shift on the branch where ``gamma(alpha)`` is monotone and hits ``gamma``."""
    lam1 = lam[0]

    def f(a):
        return _gamma_reduced(lam, _ridge_reduced(lam, delta, a), a) - gamma

    if gamma < 1:
        hi = lam1
        while f(hi) < 0:
            hi *= 2.0
        return brentq(f, 0.0, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    # gamma > 1: alpha < -lambda_1, gamma grows without bound as alpha -> -lambda_1
    gap = lam1
    while f(-lam1 - gap) > 0:
        gap *= 2.0
    near = lam1 * 1e-3
    while f(-lam1 - near) < 0:
        near *= 1e-3
        if near < 1e-14 * lam1:
            raise SingularShiftError(f"gamma = {gamma!r} is beyond the reach of the ridge grid")
    return brentq(f, -lam1 - gap, -lam1 - near, xtol=1e-15 * lam1,
                  rtol=4 * np.finfo(float).eps, maxiter=500)


def direction_at_gamma(model: ScatterModel, gamma: float) -> PathPoint:
    """The binary continuum direction for one exact value of gamma.

    Solves ``gamma(alpha) = gamma`` for the ridge shift on the matching
    branch.  ``gamma = 0``, ``1`` and ``inf`` give the MDP, MD and PCA
    directions; when d is orthogonal to the top eigenspace the analytic
    rare-case solution is used (first representative in case (ii)).
    """
    delta = _delta(model)
    lam = model.lambdas
    if not gamma >= 0:
        raise ConfigError("gamma must be nonnegative")
    if math.isinf(gamma):
        return PathPoint(math.inf, -model.lambda1, pc1_direction(model), model.lambda1, "PCA")
    if gamma == 0:
        return _point(model, _ridge_reduced(lam, delta, 0.0), 0.0, 0.0, "MDP")
    if gamma == 1:
        return PathPoint(1.0, math.inf, md_direction(model),
                         _reduced_criterion(model, _unit(delta), 1.0), "MD")
    if gamma > 1 and is_rare_case(model):
        sol = rare_case_direction(model, gamma)
        return _point(model, model.U.T @ sol.directions[0], gamma, sol.alpha, "rare")
    a = _alpha_for_gamma(lam, delta, gamma)
    return _point(model, _ridge_reduced(lam, delta, a), gamma, a, "ridge")


def _point(model, z, gamma, alpha, kind):
    w = model.to_full(z)
    return PathPoint(float(gamma), float(alpha), w, _reduced_criterion(model, z, gamma), kind)


def binary_path(model: ScatterModel, K: int = 100, M: Optional[float] = None,
                eps: float = NEG_BRANCH_EPS) -> ContinuumPath:
    """Discrete family of continuum directions, sorted by gamma.

    Uses the grids ``alpha_k = k M / K`` and
    ``alpha^k = -(1 + eps) lambda_1 - (K - k) M / K`` for ``k = 0..K``
    (``M = 10 lambda_1`` by default), plus the MD (gamma = 1) and PCA
    (gamma = inf) endpoints.  If d is orthogonal to the top eigenspace the
    large-gamma end is completed analytically.
    """
    if K < 2:
        raise ConfigError("grid size K must be at least 2")
    delta = _delta(model)
    lam = model.lambdas
    lam1 = model.lambda1
    M = 10.0 * lam1 if M is None else float(M)
    if not M > 0:
        raise ConfigError("M must be positive")

    points = []
    for k in range(K + 1):
        a = k * M / K
        z = _ridge_reduced(lam, delta, a)
        points.append(_point(model, z, _gamma_reduced(lam, z, a), a, "MDP" if k == 0 else "ridge"))

    points.append(PathPoint(1.0, math.inf, md_direction(model),
                            _reduced_criterion(model, _unit(delta), 1.0), "MD"))

    for k in range(K + 1):
        a = -(1.0 + eps) * lam1 - (K - k) * M / K
        z = _ridge_reduced(lam, delta, a)
        points.append(_point(model, z, _gamma_reduced(lam, z, a), a, "ridge"))

    if is_rare_case(model):
        iota, _, lam2, delta2 = _rare_parts(model)
        g_crit, _ = _critical_gamma(lam1, lam2, delta2)
        for g in g_crit * np.geomspace(1.0, 1e3, K + 1):
            sol = rare_case_direction(model, g)
            z = model.U.T @ sol.directions[0]
            points.append(_point(model, z, g, sol.alpha, "rare"))

    pc1 = pc1_direction(model)
    points.append(PathPoint(math.inf, -lam1, pc1, lam1, "PCA"))
    points.sort(key=lambda pt: pt.gamma)
    return ContinuumPath(tuple(points))
