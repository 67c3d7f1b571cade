"""Continuum directions between LDA, MDP and PCA, and continuum discriminant analysis.

Data matrices are ``p x n``: one column per observation.
"""

__version__ = "0.1.0"

from .binary import (ContinuumPath, PathPoint, RareCaseSolution, binary_path, direction_at_gamma,
                     gamma_of_alpha,
                     is_rare_case, lda_direction, md_direction, mdp_direction, pc1_direction,
                     rare_case_direction, ridge_direction)
from .classifier import (BaselineModel, CdaModel, cda_from_basis, fit_baseline, fit_cda,
                         fit_cda_grid, predict, predict_baseline, project_scores)
from .errors import (ConfigError, ContinuumError, ConvergenceError, DataError, NumericalError)
from .io import load_csv
from .scatter import (Dataset, ScatterModel, SupervisionEncoding, build_scatter, center_columns,
                      encode_supervision, fit_scatter, within_scatter)
from .selection import CvReport, cv_gamma, stratified_folds
from .simulation import (ExperimentResult, HdlssConfig, HdlssResult, SimConfig, c0_scaling,
                         hdlss_angle_experiment, run_classification_experiment,
                         sample_compound_symmetry)
from .solver import (ContinuumBasis, SolverConfig, continuum_basis, continuum_bases, criterion,
                     deflate, gradient, maximize_direction)

__all__ = [
    "BaselineModel", "CdaModel", "ConfigError", "ContinuumBasis", "ContinuumError",
    "ContinuumPath", "ConvergenceError", "CvReport", "DataError", "Dataset", "ExperimentResult",
    "HdlssConfig", "HdlssResult", "NumericalError", "PathPoint", "RareCaseSolution",
    "ScatterModel", "SimConfig", "SolverConfig", "SupervisionEncoding", "binary_path",
    "build_scatter", "c0_scaling", "cda_from_basis", "center_columns", "continuum_basis",
    "continuum_bases", "criterion", "cv_gamma", "deflate", "direction_at_gamma", "encode_supervision", "fit_baseline",
    "fit_cda", "fit_cda_grid", "fit_scatter", "gamma_of_alpha", "gradient",
    "hdlss_angle_experiment", "is_rare_case", "lda_direction", "load_csv", "maximize_direction",
    "md_direction", "mdp_direction", "pc1_direction", "predict", "predict_baseline",
    "project_scores", "rare_case_direction", "ridge_direction", "run_classification_experiment",
    "sample_compound_symmetry", "stratified_folds", "within_scatter",
]
