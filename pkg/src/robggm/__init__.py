"""Robust Gaussian graphical models under cell-wise contamination.

Pairwise gamma-divergence correlations, rank-based and Qn-based competitors,
PSD projection, graphical lasso and node-wise lasso, penalty selection and a
seeded simulation harness.
"""

from ._base import (ConfigurationError, ConvergenceError, DataMatrix, DegenerateScaleError,
                    rng_for)
from .covmat import COV_METHODS, CovEstimate, assemble_cov, psd_project
from .datagen import ContaminationSpec, PrecisionModel, contaminate, generate_graph, sample_clean
from .evalmetrics import MetricsRecord, compare_edges, matrix_errors, roc_auc, roc_curve
from .graphest import (EdgeSet, PrecisionEstimate, edges_from_nodewise, edges_from_precision,
                       glasso, glasso_path, nodewise_lasso)
from .paircorr import PgdConfig, gamma_corr, gamma_corr_matrix, gk_pairwise_cov, rank_corr
from .select import cv2_select, lambda_for_edges, lambda_grid, stars_select
from .unirobust import GammaConfig, gamma_univariate_fit, median_mad, qn_scale

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "ConvergenceError", "DataMatrix", "DegenerateScaleError", "rng_for",
    "COV_METHODS", "CovEstimate", "assemble_cov", "psd_project",
    "ContaminationSpec", "PrecisionModel", "contaminate", "generate_graph", "sample_clean",
    "MetricsRecord", "compare_edges", "matrix_errors", "roc_auc", "roc_curve",
    "EdgeSet", "PrecisionEstimate", "edges_from_nodewise", "edges_from_precision", "glasso",
    "glasso_path", "nodewise_lasso",
    "PgdConfig", "gamma_corr", "gamma_corr_matrix", "gk_pairwise_cov", "rank_corr",
    "cv2_select", "lambda_for_edges", "lambda_grid", "stars_select",
    "GammaConfig", "gamma_univariate_fit", "median_mad", "qn_scale",
]
