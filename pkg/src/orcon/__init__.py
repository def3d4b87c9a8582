"""Modelling, solving and certifying nonlinear programs with or-constraints."""

from .errors import OrconError
from .model import FEAS_TOL, KnownOptimum, MpocProblem, SmoothFn, VectorFn, feasibility, grad_check
from .nlp import NlpSolution, NlpSpec, kkt_residual, solve_nlp

__version__ = "0.1.0"

__all__ = [
    "FEAS_TOL",
    "KnownOptimum",
    "MpocProblem",
    "NlpSolution",
    "NlpSpec",
    "OrconError",
    "SmoothFn",
    "VectorFn",
    "feasibility",
    "grad_check",
    "kkt_residual",
    "solve_nlp",
]
