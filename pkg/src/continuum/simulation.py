"""Gaussian simulation models and experiment drivers.

Two kinds of experiment are provided: classification error tables under the
compound symmetry model ``Sigma_rho = (1 - rho) I + rho 1 1'``, and angle
checks for the ridge-form continuum direction as the dimension grows with
the sample sizes fixed.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._json import dumps
from .binary import gamma_of_alpha, ridge_direction
from .classifier import cda_from_basis, fit_baseline, fit_cda
from .errors import ConfigError, ContinuumError
from .scatter import Dataset, fit_scatter
from .selection import cv_gamma
from .solver import ContinuumBasis, SolverConfig

log = logging.getLogger(__name__)

METHODS = ("CDA", "MD", "MDP", "LDA", "centroid", "Bayes")
_BINARY_ONLY = ("MD", "MDP", "LDA")


@dataclass(frozen=True)
class SimConfig:
    """Compound symmetry classification experiment.

    Class 1 has mean zero, class 2 has ``c0`` on the first ``s`` coordinates
    and, for ``K = 3``, class 3 has ``c0`` on coordinates ``s..2s-1``.  ``c0``
    puts the Mahalanobis distance between classes 1 and 2 at
    ``mahalanobis_target``.
    """

    p: int = 200
    rho: float = 0.0
    s: int = 10
    K: int = 2
    n_per_class: int = 50
    n_test_per_class: int = 50
    replications: int = 100
    seed: int = 0
    mahalanobis_target: float = 3.0
    folds: int = 10
    gamma_grid: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ConfigError(f"rho must lie in [0, 1), got {self.rho}")
        if self.K not in (2, 3):
            raise ConfigError("K must be 2 or 3")
        if not 1 <= self.s <= self.p or (self.K == 3 and 2 * self.s > self.p):
            raise ConfigError(f"s={self.s} does not fit p={self.p} with K={self.K}")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.n_per_class < self.folds or self.n_test_per_class < 1:
            raise ConfigError("n_per_class must be at least the number of folds")
        if not self.mahalanobis_target > 0:
            raise ConfigError("mahalanobis_target must be positive")

    def means(self) -> np.ndarray:
        """Class means as a p x K matrix."""
        c0 = c0_scaling(self.p, self.rho, self.s, self.mahalanobis_target)
        M = np.zeros((self.p, self.K))
        M[: self.s, 1] = c0
        if self.K == 3:
            M[self.s: 2 * self.s, 2] = c0
        return M


def cs_inverse_apply(X, rho: float) -> np.ndarray:
    """``Sigma_rho^-1 X`` in closed form for a p x n (or length-p) array."""
    X = np.asarray(X, dtype=float)
    p = X.shape[0]
    return (X - rho / (1 - rho + p * rho) * X.sum(axis=0)) / (1 - rho)


def bayes_predict(cfg: SimConfig, X) -> np.ndarray:
    """Optimal rule with the true means and covariance and equal priors."""
    M = cfg.means()
    A = cs_inverse_apply(M, cfg.rho)  # p x K
    scores = X.T @ A - 0.5 * np.einsum("pk,pk->k", M, A)
    return np.argmax(scores, axis=1)


def _check_rho(rho):
    if not 0 <= rho < 1:
        raise ConfigError(f"rho must lie in [0, 1), got {rho}")


def sample_compound_symmetry(p: int, rho: float, n: int, mean=None, seed=None) -> np.ndarray:
    """Draw ``n`` columns from ``N(mean, (1 - rho) I + rho 1 1')``.

    Uses ``x = mean + sqrt(1 - rho) e + sqrt(rho) g 1`` with ``e`` standard
    normal in R^p and scalar ``g``; no p x p matrix is formed.  ``seed`` may
    be an int, a SeedSequence or a Generator.
    """
    _check_rho(rho)
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((p, n))
    g = rng.standard_normal(n)
    X = math.sqrt(1 - rho) * e + math.sqrt(rho) * g[None, :]
    if mean is not None:
        X += np.asarray(mean, dtype=float).reshape(p, 1)
    return X


def c0_scaling(p: int, rho: float, s: int, target: float = 3.0) -> float:
    """Scale ``c0`` with ``c0^2 1_s' Sigma_rho^-1 1_s = target^2``.

    >>> round(c0_scaling(200, 0.0, 10), 5)
    0.94868
    """
    _check_rho(rho)
    if not 1 <= s <= p:
        raise ConfigError("need 1 <= s <= p")
    q = (s - rho * s * s / (1 - rho + p * rho)) / (1 - rho)
    return target / math.sqrt(q)


def _draw(cfg: SimConfig, rng, n_per_class: int) -> Dataset:
    M = cfg.means()
    X = np.hstack([sample_compound_symmetry(cfg.p, cfg.rho, n_per_class, M[:, k], rng)
                   for k in range(cfg.K)])
    return Dataset(X, np.repeat(np.arange(cfg.K), n_per_class))


def _replicate(cfg: SimConfig, methods: Sequence[str], seq: np.random.SeedSequence,
               solver: Optional[SolverConfig]) -> Dict:
    rng = np.random.default_rng(seq)
    train = _draw(cfg, rng, cfg.n_per_class)
    test = _draw(cfg, rng, cfg.n_test_per_class)
    cv_seed = int(rng.integers(2**31))
    out = {"errors": {}, "failures": {}, "gamma": None}
    for method in methods:
        try:
            if method == "CDA":
                rep = cv_gamma(train, cfg.gamma_grid, cfg.folds, cv_seed, solver)
                model = fit_cda(train, rep.chosen_gamma, solver)
                out["gamma"] = rep.chosen_gamma
            elif method == "Bayes":
                wrong = np.mean(bayes_predict(cfg, test.X) != test.labels)
                out["errors"][method] = 100.0 * float(wrong)
                continue
            else:
                model = fit_baseline(train, method)
            wrong = np.mean(model.predict(test.X) != test.labels)
            out["errors"][method] = 100.0 * float(wrong)
        except ContinuumError as exc:
            log.warning("replication failed for %s: %s", method, exc)
            out["errors"][method] = math.nan
            out["failures"][method] = f"{type(exc).__name__}: {exc}"
    return out


@dataclass(frozen=True)
class ExperimentResult:
    """Per-replication test errors (percent) and their summaries."""

    config: SimConfig
    methods: Tuple[str, ...]
    errors: Dict[str, np.ndarray]
    chosen_gammas: np.ndarray
    failures: Dict[str, List[str]] = field(default_factory=dict)

    def mean(self, method: str) -> float:
        return float(np.nanmean(self.errors[method]))

    def sd(self, method: str) -> float:
        e = self.errors[method]
        e = e[~np.isnan(e)]
        return float(np.std(e, ddof=1)) if e.size > 1 else math.nan

    def to_dict(self) -> Dict:
        cfg = asdict(self.config)
        return {
            "config": cfg,
            "summary": {m: {"mean": self.mean(m), "sd": self.sd(m),
                            "failed": len(self.failures.get(m, []))} for m in self.methods},
            "errors": {m: self.errors[m] for m in self.methods},
            "chosen_gamma": self.chosen_gammas,
            "failures": self.failures,
        }

    def to_json(self, **kwargs) -> str:
        return dumps(self.to_dict(), **kwargs)

    def to_table(self) -> str:
        """Aligned text table: mean error with standard deviation in parentheses."""
        c = self.config
        head = ["rho", "p", "s", "K"] + list(self.methods)
        row = [f"{c.rho:g}", str(c.p), str(c.s), str(c.K)]
        row += [f"{self.mean(m):.2f} ({self.sd(m):.2f})" for m in self.methods]
        widths = [max(len(h), len(r)) for h, r in zip(head, row)]
        line = lambda cells: "  ".join(x.rjust(w) for x, w in zip(cells, widths))
        return "\n".join([line(head), line(row)])


def run_classification_experiment(cfg: SimConfig, methods: Optional[Sequence[str]] = None,
                                  solver: Optional[SolverConfig] = None,
                                  workers: int = 1) -> ExperimentResult:
    """Repeat train/test draws and record test misclassification percentages.

    CDA tunes gamma by ``cfg.folds``-fold cross-validation in every
    replication.  ``"Bayes"`` is the optimal rule built from the true model
    parameters; it gives the error floor for the configuration.  Each replication owns a child of the master SeedSequence, so
    results do not depend on ``workers``.  Failures are recorded per method
    and replication, not raised.
    """
    if methods is None:
        methods = ("CDA", "MD", "MDP", "LDA", "centroid") if cfg.K == 2 else ("CDA", "centroid")
    methods = tuple(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ConfigError(f"unknown methods {sorted(unknown)}")
    if cfg.K > 2 and set(methods) & set(_BINARY_ONLY):
        raise ConfigError(f"{sorted(set(methods) & set(_BINARY_ONLY))} need K = 2")
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reps = list(ex.map(_replicate, [cfg] * len(seqs), [methods] * len(seqs), seqs,
                               [solver] * len(seqs)))
    else:
        reps = [_replicate(cfg, methods, s, solver) for s in seqs]
    errors = {m: np.array([r["errors"][m] for r in reps]) for m in methods}
    failures = {m: [r["failures"][m] for r in reps if m in r["failures"]] for m in methods}
    failures = {m: v for m, v in failures.items() if v}
    gammas = np.array([math.nan if r["gamma"] is None else r["gamma"] for r in reps])
    return ExperimentResult(cfg, methods, errors, gammas, failures)


@dataclass(frozen=True)
class HdlssConfig:
    """Two spherical Gaussian classes with fixed sample sizes and growing p.

    Class 1 is ``N(0, sigma1_2 I)`` and class 2 is ``N(mu, sigma2_2 I)`` with
    ``mu = sqrt(delta2) 1_p``, so ``||mu||^2 / p = delta2``.  For
    ``delta2 = 0`` the mean difference is the fixed unit vector
    ``1_p / sqrt(p)``.
    """

    delta2: float = 1.0
    sigma1_2: float = 1.0
    sigma2_2: float = 1.0
    n1: int = 25
    n2: int = 25
    p_sequence: Tuple[int, ...] = (250, 1000, 4000)
    replications: int = 50
    seed: int = 0
    alpha: float = 1.0
    n_test_per_class: int = 100

    def __post_init__(self):
        if not (self.sigma1_2 > 0 and self.sigma2_2 > 0):
            raise ConfigError("variances must be positive")
        if self.delta2 < 0:
            raise ConfigError("delta2 must be nonnegative")
        ps = np.asarray(self.p_sequence)
        if ps.size == 0 or np.any(np.diff(ps) <= 0) or ps[0] < 1:
            raise ConfigError("p_sequence must be strictly increasing positive integers")
        if self.n1 < 2 or self.n2 < 2 or self.replications < 1 or not self.alpha > 0:
            raise ConfigError("need n1, n2 >= 2, replications >= 1 and alpha > 0")

    def mean_difference(self, p: int) -> np.ndarray:
        if self.delta2 == 0:
            return np.full(p, 1.0 / math.sqrt(p))
        return np.full(p, math.sqrt(self.delta2))

    @property
    def limit_angle(self) -> float:
        """Limiting angle in degrees between sample and population directions."""
        noise = self.sigma1_2 / self.n1 + self.sigma2_2 / self.n2
        return math.degrees(math.acos(math.sqrt(self.delta2 / (self.delta2 + noise))))


def population_direction(mu, sigma_w2: float, alpha_p: float) -> np.ndarray:
    """Unit ``(Sigma_W + mu mu' + alpha_p I)^-1 mu`` for ``Sigma_W = sigma_w2 I``.

    With ``a = sigma_w2 + alpha_p`` the rank-one Woodbury identity gives
    ``(a I + mu mu')^-1 mu = mu / (a + mu'mu)``.
    """
    mu = np.asarray(mu, dtype=float)
    a = sigma_w2 + alpha_p
    w = mu / (a + mu @ mu)
    return w / np.linalg.norm(w)


def _angle_deg(u, v) -> float:
    c = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.degrees(math.acos(min(1.0, c)))


@dataclass(frozen=True)
class HdlssResult:
    config: HdlssConfig
    angles: Dict[int, np.ndarray]
    test_errors: Dict[int, np.ndarray]

    def mean_angle(self, p: int) -> float:
        return float(np.mean(self.angles[p]))

    def mean_error(self, p: int) -> float:
        return float(np.mean(self.test_errors[p]))

    def to_dict(self) -> Dict:
        return {
            "config": asdict(self.config),
            "limit_angle_deg": self.config.limit_angle,
            "rows": [{"p": p, "mean_angle_deg": self.mean_angle(p),
                      "sd_angle_deg": float(np.std(self.angles[p], ddof=1))
                      if self.angles[p].size > 1 else math.nan,
                      "cda_test_error_pct": self.mean_error(p)} for p in self.config.p_sequence],
        }

    def to_json(self, **kwargs) -> str:
        return dumps(self.to_dict(), **kwargs)

    def to_table(self) -> str:
        head = ["p", "mean angle", "limit", "CDA error %"]
        rows = [[str(p), f"{self.mean_angle(p):.2f}", f"{self.config.limit_angle:.2f}",
                 f"{self.mean_error(p):.2f}"] for p in self.config.p_sequence]
        widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
        return "\n".join("  ".join(x.rjust(w) for x, w in zip(r, widths)) for r in [head] + rows)


def hdlss_angle_experiment(cfg: HdlssConfig) -> HdlssResult:
    """Angle between sample and population ridge directions as p grows.

    The ridge parameter scales with the dimension, ``alpha_p = alpha * p``.
    The sample direction also drives a one-direction CDA whose error is
    measured on fresh test draws.
    """
    seqs = np.random.SeedSequence(cfg.seed).spawn(len(cfg.p_sequence))
    angles, errs = {}, {}
    s1, s2 = math.sqrt(cfg.sigma1_2), math.sqrt(cfg.sigma2_2)
    for p, seq in zip(cfg.p_sequence, seqs):
        rng = np.random.default_rng(seq)
        mu = cfg.mean_difference(p)
        alpha_p = cfg.alpha * p
        # population direction for mu_1 - mu_2 = -mu; orientation is irrelevant for angles
        omega = population_direction(mu, 0.5 * (cfg.sigma1_2 + cfg.sigma2_2), alpha_p)
        a, e = np.empty(cfg.replications), np.empty(cfg.replications)
        nt = cfg.n_test_per_class
        for r in range(cfg.replications):
            X = np.hstack([s1 * rng.standard_normal((p, cfg.n1)),
                           mu[:, None] + s2 * rng.standard_normal((p, cfg.n2))])
            labels = np.repeat([0, 1], [cfg.n1, cfg.n2])
            data = Dataset(X, labels)
            model, center, _ = fit_scatter(X, labels=labels)
            w = ridge_direction(model, alpha_p)
            a[r] = _angle_deg(w, omega)
            basis = ContinuumBasis(gamma_of_alpha(alpha_p, w, model), w[:, None],
                                   (model.U.T @ w)[:, None], np.array([math.nan]),
                                   [0], [0.0], [True])
            cda = cda_from_basis(data, basis, center)
            Xt = np.hstack([s1 * rng.standard_normal((p, nt)),
                            mu[:, None] + s2 * rng.standard_normal((p, nt))])
            e[r] = 100.0 * float(np.mean(cda.predict(Xt) != np.repeat([0, 1], nt)))
        angles[p], errs[p] = a, e
    return HdlssResult(cfg, angles, errs)
