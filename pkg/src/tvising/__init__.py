"""Sparsistent estimation of time-varying binary Markov random fields."""
from .core import (
    Dataset,
    Graph,
    NodeParameter,
    Observation,
    SignedEdgeVector,
    conditional_prob,
    logloss,
    score,
    variance_fn,
)
from .estimator import EstimatorConfig, estimate_graph, estimate_neighborhood, estimate_path
from .kernel import KernelSpec, bandwidth_default, kernel_eval, weights
from .optimizer import SolveConfig, kkt_residual, lambda_default, objective, solve
from .sampler import ParameterPath, PathPreset, exact_sample, generate_dataset, gibbs_sample

__version__ = "0.1.0"
