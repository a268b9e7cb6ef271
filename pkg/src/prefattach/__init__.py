"""Undirected preferential attachment graphs: simulation, exact small-n laws,
martingale diagnostics and the Gaussian limit of the degree counts."""

__version__ = "0.1.0"

from .experiment import ExperimentConfig, ExperimentReport, ScaledSample, empirical_moments, ks_normal, run_experiment
from .martingale import martingale_path, mg_one_step_residual
from .model import DegreeCensus, GraphState, ModelParams, degree_census, grow_step, grow_to, init_graph, stream_rng
from .oracle import ExactDistribution, OracleBudgetError, enumerate_stages, exact_cov, exact_mean
from .theory import a_coef, b_coef, mean_recursion, pk, r_y, r_z, sigma1_sq, sigma_matrix

__all__ = [
    "__version__",
    "ModelParams",
    "GraphState",
    "DegreeCensus",
    "stream_rng",
    "init_graph",
    "grow_step",
    "grow_to",
    "degree_census",
    "pk",
    "sigma1_sq",
    "a_coef",
    "b_coef",
    "mean_recursion",
    "r_y",
    "r_z",
    "sigma_matrix",
    "ExactDistribution",
    "OracleBudgetError",
    "enumerate_stages",
    "exact_mean",
    "exact_cov",
    "martingale_path",
    "mg_one_step_residual",
    "ExperimentConfig",
    "ExperimentReport",
    "ScaledSample",
    "empirical_moments",
    "ks_normal",
    "run_experiment",
]
