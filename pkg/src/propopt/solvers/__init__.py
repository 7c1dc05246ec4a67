from .inductive import InductiveModel, fit_inductive, marginalized_precision, predict_inductive
from .maxdiff import maxdiff_objective, solve_maxdiff
from .transductive import (TransductiveProblem, kkt_residual, lipschitz_constant, smooth_objective,
                           solve_l1, solve_quadratic)

__all__ = [
    "TransductiveProblem",
    "InductiveModel",
    "solve",
    "solve_quadratic",
    "solve_l1",
    "solve_maxdiff",
    "fit_inductive",
    "predict_inductive",
    "marginalized_precision",
    "smooth_objective",
    "maxdiff_objective",
    "kkt_residual",
    "lipschitz_constant",
]


def solve(problem: TransductiveProblem):
    """Pick the transductive solver matching the problem's weights."""
    w = problem.weights
    if w.robustness_form == "max-difference":
        return solve_maxdiff(problem)
    if w.lambda_complex > 0:
        return solve_l1(problem)
    return solve_quadratic(problem)
