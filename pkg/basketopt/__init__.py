#!/usr/bin/env python3
"""
BasketOptimizer - Bayesian basket trial design with information borrowing

This package provides modular components for:
- Beta-binomial posteriors, divergences and similarity-based borrowing
- Exact and Monte Carlo operating characteristics
- Utility functions over scenario sets
- Derivative-free optimization of the tuning parameters
- Optimizer benchmarks, utility comparison studies and further analyses
"""

__version__ = "1.0.0"

from .design import Design, TuningParams, decide, extreme_boundary
from .distributions import BetaShapes, DivergenceKind, divergence, hellinger, jsd, kld, reg_inc_beta, reg_inc_beta_array
from .errors import BasketOptError, ConfigError, DomainError, NumericalError, OutcomeSpaceError
from .oc_exact import Backend, OCResult, Scenario, exact_oc
from .oc_mc import McConfig, mc_oc, mcse
from .scenarios import ScenarioSet, scenario_library
from .statistics import se_of_sd, summarize
from .utility import EvalBackend, OCEvaluator, UtilityObjective, UtilitySpec, evaluate_utility
from .optimizers import Box, OptimizerConfig, OptimizerResult, de, grid_search, gwo, run_optimizer, sa_bounded, sa_unbounded
from .analyses import boundary_curve, toer_curve
from .config import ConfigManager, RunConfig, get_config_manager, parse_config
from .experiment_runner import BenchmarkRunner, ComparisonRunner, report_digest, run_part1, run_part2_3, select_algorithm
from .logging_config import get_logger
from .monitor import ResourceMonitor

__all__ = [
    'Design',
    'TuningParams',
    'decide',
    'extreme_boundary',
    'BetaShapes',
    'DivergenceKind',
    'divergence',
    'hellinger',
    'jsd',
    'kld',
    'reg_inc_beta',
    'reg_inc_beta_array',
    'BasketOptError',
    'ConfigError',
    'DomainError',
    'NumericalError',
    'OutcomeSpaceError',
    'Backend',
    'OCResult',
    'Scenario',
    'exact_oc',
    'McConfig',
    'mc_oc',
    'mcse',
    'ScenarioSet',
    'scenario_library',
    'se_of_sd',
    'summarize',
    'EvalBackend',
    'OCEvaluator',
    'UtilityObjective',
    'UtilitySpec',
    'evaluate_utility',
    'Box',
    'OptimizerConfig',
    'OptimizerResult',
    'de',
    'grid_search',
    'gwo',
    'run_optimizer',
    'sa_bounded',
    'sa_unbounded',
    'boundary_curve',
    'toer_curve',
    'ConfigManager',
    'RunConfig',
    'get_config_manager',
    'parse_config',
    'BenchmarkRunner',
    'ComparisonRunner',
    'report_digest',
    'run_part1',
    'run_part2_3',
    'select_algorithm',
    'get_logger',
    'ResourceMonitor',
]
