"""Lifelong Bayesian optimization with IBP-gated neural basis functions."""

from .space import Categorical, Continuous, Integer, SearchSpace, SpaceError
from .bayes import BayesHead, fit_posterior, log_marginal, log_marginal_dual, log_marginal_primal
from .acquisition import expected_improvement, initial_design, propose_next
from .engine import (
    LBOConfig,
    LBOOptimizer,
    SnapshotStore,
    TaskModel,
    fit_task,
    graph_regularizer,
    select_reg_weight,
    snapshot,
)
from .baselines import RandomSearchOptimizer, SharedNNOptimizer, SingleTaskNNOptimizer
from .benchmarks import BraninParams, SequenceSpec, branin, branin_space, correlation_heatmap, perturbed_sequence
from .external import EvaluationError, ExternalBlackBox

__version__ = "0.1.0"

__all__ = [
    "SearchSpace", "Continuous", "Integer", "Categorical", "SpaceError",
    "BayesHead", "fit_posterior", "log_marginal", "log_marginal_primal", "log_marginal_dual",
    "expected_improvement", "propose_next", "initial_design",
    "LBOConfig", "LBOOptimizer", "TaskModel", "SnapshotStore",
    "fit_task", "snapshot", "graph_regularizer", "select_reg_weight",
    "RandomSearchOptimizer", "SingleTaskNNOptimizer", "SharedNNOptimizer",
    "BraninParams", "branin", "branin_space", "SequenceSpec",
    "perturbed_sequence", "correlation_heatmap",
    "ExternalBlackBox", "EvaluationError",
]
