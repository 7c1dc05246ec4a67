"""Explanations as explicit optimization over faithfulness, robustness,
smoothness and complexity, with the usual baselines and a sweep harness."""

from . import baselines, functions, harness, losses, similarity, solvers
from ._kernels import BACKEND
from .baselines import PerturbationSpec, kernel_shap, lime, smoothgrad
from .errors import (ConfigError, ConvexityError, IterationLimitError, PropoptError, RankError,
                     SamplingError, SolverError, ValidationError)
from .functions import (DifferentiableFunction, PointSet, generate_points, gradient_check, load_mlp,
                        make_benchmark)
from .losses import LossReport, PropertyWeights, evaluate_all
from .similarity import SimilarityBundle, SimilaritySpec, make_bundle
from .solvers import (TransductiveProblem, fit_inductive, predict_inductive, solve, solve_l1,
                      solve_maxdiff, solve_quadratic)

__version__ = "0.1.0"

__all__ = [
    "functions", "similarity", "losses", "solvers", "baselines", "harness", "BACKEND",
    "PropoptError", "ValidationError", "ConfigError", "SolverError", "ConvexityError", "IterationLimitError",
    "RankError", "SamplingError",
    "DifferentiableFunction", "PointSet", "make_benchmark", "load_mlp", "generate_points", "gradient_check",
    "PropertyWeights", "LossReport", "evaluate_all",
    "SimilaritySpec", "SimilarityBundle", "make_bundle",
    "TransductiveProblem", "solve", "solve_quadratic", "solve_l1", "solve_maxdiff", "fit_inductive",
    "predict_inductive",
    "PerturbationSpec", "smoothgrad", "lime", "kernel_shap",
]
