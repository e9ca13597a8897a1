"""Variational Holder upper bounds and mean-field lower bounds for truncated Gaussian integrals."""

from .estimators import MeanFieldVB, VariationalHolder
from .experiment import ExperimentConfig, ReportRow, run_experiment
from .multifactor import GaussianFactor, KFactorSpec, k_factor_log_bound, k_factor_minimize
from .oracles import EffectiveSampleSizeTooLow, OracleEstimate, oracle_grid, oracle_importance
from .posterior import Certificate, PosteriorPair, build_posteriors, certify, posterior_moments
from .problem import (ONE, STEP, ConstantOne, InstanceSpec, InvalidProblem, Problem, StepAtZero,
                      Tabulated, generate_instance, load_problem, make_problem, validate)
from .vb import MeanFieldParams, vb_bound, vb_maximize
from .vh import BoundResult, PivotParams, log_bound, minimize

__all__ = [
    "MeanFieldVB", "VariationalHolder", "ExperimentConfig", "ReportRow", "run_experiment",
    "GaussianFactor", "KFactorSpec", "k_factor_log_bound", "k_factor_minimize",
    "EffectiveSampleSizeTooLow", "OracleEstimate", "oracle_grid", "oracle_importance",
    "Certificate", "PosteriorPair", "build_posteriors", "certify", "posterior_moments",
    "ONE", "STEP", "ConstantOne", "InstanceSpec", "InvalidProblem", "Problem", "StepAtZero",
    "Tabulated", "generate_instance", "load_problem", "make_problem", "validate",
    "MeanFieldParams", "vb_bound", "vb_maximize", "BoundResult", "PivotParams", "log_bound",
    "minimize",
]
