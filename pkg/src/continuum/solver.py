"""Projected gradient ascent for the continuum criterion and sequential bases.

The criterion is ``T_gamma(w) = (w'S_B w) (w'S_T w)^(gamma - 1)`` on the unit
sphere.  Successive directions are kept S_T-orthogonal by restricting the
problem to the nullspace of ``Z_k = S_T W_k``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import (ConfigError, ConvergenceError, DeflationRankError,
                     UndefinedGradientError)

log = logging.getLogger(__name__)

#: gamma = 0 makes the exponent on w'S_T w singular; the solver runs this instead.
GAMMA_ZERO_SURROGATE = 1e-6

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-10
    max_iter: int = 10000
    initial_step: float = 1e3
    kappa: int = 1
    seed: int = 0
    debug: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")
        if not self.initial_step >= 1:
            raise ConfigError("initial_step must be >= 1")
        if self.kappa < 1:
            raise ConfigError("kappa must be at least 1")


@dataclass(frozen=True)
class ContinuumBasis:
    """S_T-orthonormal directions for one value of gamma.

    ``W`` is p x kappa in the original coordinates; ``W_reduced`` holds the
    same columns in the reduced eigen-coordinates of the scatter model.
    """

    gamma: float
    W: np.ndarray
    W_reduced: np.ndarray
    criterion_values: np.ndarray
    iterations: List[int] = field(default_factory=list)
    deltas: List[float] = field(default_factory=list)
    converged: List[bool] = field(default_factory=list)

    @property
    def kappa(self) -> int:
        return self.W.shape[1]


def _quad(w, A):
    return float(w @ (A @ w))


def criterion(w, Sb, St, gamma) -> float:
    """Evaluate ``T_gamma`` at ``w / ||w||``.

    Returns ``inf`` when ``w'S_T w`` vanishes with ``gamma < 1`` and
    ``w'S_B w > 0`` (data piling).
    """
    w = np.asarray(w, dtype=float)
    nrm = np.linalg.norm(w)
    if nrm == 0:
        raise ValueError("w must be nonzero")
    w = w / nrm
    b = _quad(w, Sb)
    if gamma == 1:
        return b
    t = _quad(w, St)
    scale = max(np.abs(np.diag(St)).max(), np.finfo(float).tiny)
    if t <= 1e-14 * scale:
        if gamma < 1:
            return math.inf if b > 0 else 0.0
        return 0.0
    return b * t ** (gamma - 1)


def gradient(w, Sb, St, gamma) -> np.ndarray:
    """Ascent direction ``S_B w/(w'S_B w) + (gamma-1) S_T w/(w'S_T w)``.

    This is half the Euclidean gradient of ``log[(w'S_B w)(w'S_T w)^(gamma-1)]``
    with ``w`` unnormalized.  At a constrained maximizer it equals ``gamma * w``.
    """
    w = np.asarray(w, dtype=float)
    Sbw = Sb @ w
    b = float(w @ Sbw)
    if not b > 0:
        raise UndefinedGradientError("w'S_B w = 0; gradient undefined")
    g = Sbw / b
    if gamma != 1:
        Stw = St @ w
        t = float(w @ Stw)
        if not t > 0:
            raise UndefinedGradientError("w'S_T w = 0; gradient undefined")
        g = g + (gamma - 1) * Stw / t
    return g


class _Batch:
    """Matrix-vector products for a stack of G ascent problems.

    Iterates are rows of a (G, m) array.  ``Sb`` is given either densely or
    through a shared factor ``F`` with ``Sb = F F'``; ``St`` densely or as a
    diagonal.  ``Q`` (G, m, k), if given, holds orthonormal bases of the
    spaces to deflate: both scatters are replaced by ``P S P`` with
    ``P = I - Q Q'``.
    """

    def __init__(self, gammas, Sb=None, St=None, Sb_factor=None, St_diag=None, Q=None):
        self.gammas = np.asarray(gammas, dtype=float)
        self.Sb, self.St, self.F, self.St_diag, self.Q = Sb, St, Sb_factor, St_diag, Q

    def _project(self, W):
        if self.Q is None:
            return W
        return W - np.einsum("gmk,gk->gm", self.Q, np.einsum("gmk,gm->gk", self.Q, W))

    def evaluate(self, W):
        """Return ``(S_B W, S_T W, b, t, log T)`` row by row."""
        PW = self._project(W)
        Sbw = (PW @ self.F) @ self.F.T if self.F is not None else PW @ self.Sb
        Stw = PW * self.St_diag if self.St_diag is not None else PW @ self.St
        Sbw, Stw = self._project(Sbw), self._project(Stw)
        b = np.einsum("gi,gi->g", W, Sbw)
        t = np.einsum("gi,gi->g", W, Stw)
        ok = (b > 0) & ((t > 0) | (self.gammas == 1))
        with np.errstate(divide="ignore", invalid="ignore"):
            logT = np.log(b) + np.where(self.gammas == 1, 0.0, (self.gammas - 1) * np.log(t))
        logT = np.where(ok, logT, -np.inf)
        return Sbw, Stw, b, t, logT

    def subset(self, idx):
        Q = None if self.Q is None else self.Q[idx]
        return _Batch(self.gammas[idx], self.Sb, self.St, self.F, self.St_diag, Q)


def _ascend_batch(batch, inits, config):
    """Run the ascent on every problem of ``batch`` at once.

    Each row keeps its own step size ``c``: it starts at
    ``config.initial_step``, drops to 1 on the first overshoot and is halved
    on any later one.  A rejected step leaves the iterate unchanged.  Rows stop
    when ``1 - |w1'w0| < eps`` or the relative change of ``T`` is below eps;
    finished rows are dropped from the working set.

    Returns ``(W, iterations, deltas, converged)``.
    """
    W_out = np.array(inits, dtype=float)
    W_out /= np.linalg.norm(W_out, axis=1, keepdims=True)
    G = W_out.shape[0]
    Sbw, Stw, b, t, logT = batch.evaluate(W_out)
    if np.any(logT == -np.inf):
        raise UndefinedGradientError("initial point has zero criterion")
    eps = config.epsilon
    iters = np.zeros(G, dtype=int)
    deltas = np.full(G, np.inf)
    done = np.zeros(G, dtype=bool)

    idx = np.arange(G)
    sub = batch
    W = W_out.copy()
    gm1 = (batch.gammas - 1)[:, None]
    c = np.full(G, float(config.initial_step))
    for it in range(1, config.max_iter + 1):
        grad = Sbw / b[:, None] + gm1 * (Stw / t[:, None])
        V = W + c[:, None] * grad
        W1 = V / np.linalg.norm(V, axis=1, keepdims=True)
        Sbw1, Stw1, b1, t1, logT1 = sub.evaluate(W1)
        with np.errstate(invalid="ignore"):
            change = np.expm1(logT1 - logT)
        up = logT1 >= logT
        last = np.abs(change)
        if config.debug:
            assert not np.any(np.isnan(logT1)), "criterion evaluated to nan"

        # rejected rows: stationary within round-off, or shrink c and retry
        down = ~up
        flat = down & (-change < eps)
        shrink = down & ~flat
        c[shrink] = np.where(c[shrink] > 1.0, 1.0, 0.5 * c[shrink])
        stalled = shrink & (c < 1e-14)

        step = 1.0 - np.abs(np.einsum("gi,gi->g", W1, W))
        W[up], Sbw[up], Stw[up] = W1[up], Sbw1[up], Stw1[up]
        b[up], t[up], logT[up] = b1[up], t1[up], logT1[up]
        finished = flat | stalled | (up & ((step < eps) | (change < eps)))
        if not finished.any():
            continue

        ended = idx[finished]
        W_out[ended] = W[finished]
        iters[ended] = it
        dl = np.where(up, change, -change)
        dl[stalled] = 0.0
        deltas[ended] = dl[finished]
        done[ended] = True
        keep = ~finished
        if not keep.any():
            break
        idx = idx[keep]
        sub = batch.subset(idx)
        W, Sbw, Stw = W[keep], Sbw[keep], Stw[keep]
        b, t, logT, c, gm1 = b[keep], t[keep], logT[keep], c[keep], gm1[keep]
        last = last[keep]
    else:
        W_out[idx] = W
        iters[idx] = config.max_iter
        deltas[idx] = last
    return W_out, iters, deltas, done


def _ascend(batch, init, config):
    """Single-problem ascent; returns ``(w, iterations, last relative change)``."""
    W, iters, deltas, done = _ascend_batch(batch, np.atleast_2d(init), config)
    if not done[0]:
        raise ConvergenceError(
            f"no convergence within {config.max_iter} iterations", best=W[0],
            iterations=int(iters[0]))
    return W[0], int(iters[0]), float(deltas[0])


def maximize_direction(Sb, St, gamma, init, config: Optional[SolverConfig] = None) -> np.ndarray:
    """Maximize ``T_gamma`` over the unit sphere starting from ``init``.

    Updates ``w <- (w + c grad) / ||w + c grad||`` with a large initial step
    ``c``; the first overshoot drops ``c`` to 1 and any later one halves it,
    so accepted iterates never decrease the criterion.

    Raises
    ------
    UndefinedGradientError
        if ``init`` has zero criterion.
    ConvergenceError
        after ``config.max_iter`` iterations, carrying the best iterate.
    """
    config = config or SolverConfig()
    if gamma < 0:
        raise ConfigError("gamma must be nonnegative")
    batch = _Batch([gamma], Sb=np.asarray(Sb, dtype=float), St=np.asarray(St, dtype=float))
    return _ascend(batch, init, config)[0]


def _span_basis(Z):
    Q, s, _ = np.linalg.svd(Z, full_matrices=False)
    if s[-1] <= _RANK_RTOL * s[0]:
        raise DeflationRankError("Z_k = S_T W_k is rank deficient")
    return Q


def nullspace_basis(Z) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(Z)``."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    k = Z.shape[1]
    if k == 0:
        return np.eye(Z.shape[0])
    Q, s, _ = np.linalg.svd(Z, full_matrices=True)
    if s.shape[0] < k or s[-1] <= _RANK_RTOL * s[0]:
        raise DeflationRankError("Z_k = S_T W_k is rank deficient")
    return Q[:, k:]


def deflate(Sb, St, W):
    """Project both scatters onto the nullspace of ``Z = S_T W``.

    Returns ``(P Sb P, P St P)`` with ``P = I - Z (Z'Z)^{-1} Z'``.
    """
    Sb = np.asarray(Sb, dtype=float)
    St = np.asarray(St, dtype=float)
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[1] == 0:
        return Sb.copy(), St.copy()
    N = nullspace_basis(St @ W)
    P = N @ N.T
    return P @ Sb @ P, P @ St @ P


def _initial_direction(Sb, St):
    # dominant eigenvector of Sb, projected onto range(St)
    _, vecs = np.linalg.eigh(Sb)
    v = vecs[:, -1]
    lam, E = np.linalg.eigh(St)
    keep = lam > 1e-12 * max(lam.max(), np.finfo(float).tiny)
    E = E[:, keep]
    v = E @ (E.T @ v)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise UndefinedGradientError("supervision has no component in range(S_T)")
    return v / nrm


def _solve_batch(batch, inits, config, rng):
    try:
        return _ascend_batch(batch, inits, config)
    except UndefinedGradientError:
        log.debug("undefined gradient at initializer; restarting from a random point")
        inits = batch._project(np.tile(rng.standard_normal(inits.shape[1]), (inits.shape[0], 1)))
        return _ascend_batch(batch, inits, config)


def _orient(z, model):
    if model.is_binary:
        ref = float(model.d_reduced @ z)
    else:
        proj = model.Sb_factor.T @ z
        big = np.flatnonzero(np.abs(proj) > 1e-12 * max(np.abs(proj).max(), 1e-300))
        ref = proj[big[0]] if big.size else 0.0
    return -z if ref < 0 else z


def continuum_basis(model, gamma: float, kappa: Optional[int] = None,
                    config: Optional[SolverConfig] = None) -> ContinuumBasis:
    """Sequential S_T-orthonormal continuum directions for one gamma.

    Solves in the reduced eigen-coordinates of ``model`` (a
    :class:`~continuum.scatter.ScatterModel`) and maps the result back by U.
    ``gamma = 0`` is run as :data:`GAMMA_ZERO_SURROGATE`.
    """
    return continuum_bases(model, [gamma], kappa, config)[0]


def continuum_bases(model, gammas, kappa: Optional[int] = None,
                    config: Optional[SolverConfig] = None,
                    allow_unconverged: bool = False) -> List[ContinuumBasis]:
    """Continuum bases for several gammas, solved side by side.

    Each gamma follows exactly the iteration of :func:`continuum_basis`; the
    problems are only stacked so that one matrix product serves all of them.

    With ``allow_unconverged=True`` a direction that hits ``max_iter`` keeps
    its best iterate and is flagged in ``converged`` instead of raising.

    Raises
    ------
    ConvergenceError
        if any gamma fails to converge and ``allow_unconverged`` is false.
    DeflationRankError
        if ``kappa`` exceeds ``rank(S_T)`` or the supervision rank.
    """
    config = config or SolverConfig()
    kappa = config.kappa if kappa is None else kappa
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    if kappa < 1:
        raise ConfigError("kappa must be at least 1")
    if gammas.size == 0:
        return []
    if np.any(gammas < 0) or not np.all(np.isfinite(gammas)):
        raise ConfigError("gamma must be finite and nonnegative")
    g_eff = np.where(gammas == 0, GAMMA_ZERO_SURROGATE, gammas)
    m, G = model.m, gammas.shape[0]
    if kappa > m:
        raise DeflationRankError(f"kappa={kappa} exceeds rank(S_T)={m}")

    lam = model.lambdas
    F = model.Sb_factor
    Sb = model.Sb_reduced
    sb_scale = max(np.linalg.eigvalsh(Sb).max(), np.finfo(float).tiny)
    rng = np.random.default_rng(config.seed)

    Wr = np.zeros((G, m, 0))
    values = np.zeros((G, kappa))
    iters = np.zeros((G, kappa), dtype=int)
    deltas = np.zeros((G, kappa))
    conv = np.ones((G, kappa), dtype=bool)
    for k in range(kappa):
        if k == 0:
            if np.linalg.eigvalsh(Sb).max() <= 1e-12 * sb_scale:
                raise DeflationRankError("supervision scatter is zero")
            batch = _Batch(g_eff, Sb_factor=F, St_diag=lam)
            inits = np.tile(_initial_direction(Sb, np.diag(lam)), (G, 1))
        else:
            # orthonormal basis of span(S_T W_k), one per gamma
            Q = np.stack([_span_basis(lam[:, None] * Wr[g]) for g in range(G)])
            PF = F[None, :, :] - np.einsum("gmk,gkr->gmr", Q, np.einsum("gmk,mr->gkr", Q, F))
            inits = np.empty((G, m))
            for g in range(G):
                u, sv, _ = np.linalg.svd(PF[g], full_matrices=False)
                if sv[0] ** 2 <= 1e-12 * sb_scale:
                    raise DeflationRankError(
                        f"no supervision signal left for direction {k + 1}; "
                        "kappa exceeds rank(S_B)")
                # S_T is nonsingular in reduced coordinates, so range(P S_T P) = range(P)
                inits[g] = u[:, 0]
            batch = _Batch(g_eff, Sb_factor=F, St_diag=lam, Q=Q)
        V, it, dl, done = _solve_batch(batch, inits, config, rng)
        # remove round-off drift into the deflated span
        Z = batch._project(V)
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        if not np.all(done):
            bad = int(np.flatnonzero(~done)[0])
            msg = (f"no convergence within {config.max_iter} iterations "
                   f"(gamma={gammas[bad]:g}, direction {k + 1})")
            if not allow_unconverged:
                raise ConvergenceError(msg, best=model.to_full(Z[bad]), iterations=int(it[bad]))
            log.warning("%s; keeping the best iterate", msg)
        for g in range(G):
            z = Z[g] = _orient(Z[g], model)
            b = float(np.sum((F.T @ z) ** 2))
            values[g, k] = b if g_eff[g] == 1 else b * float(z @ (lam * z)) ** (g_eff[g] - 1)
        Wr = np.concatenate([Wr, Z[:, :, None]], axis=2)
        iters[:, k] = it
        deltas[:, k] = dl
        conv[:, k] = done

    return [ContinuumBasis(float(gammas[g]), model.to_full(Wr[g]), Wr[g], values[g],
                           [int(i) for i in iters[g]], [float(x) for x in deltas[g]],
                           [bool(c) for c in conv[g]])
            for g in range(G)]
