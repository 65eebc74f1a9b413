"""MOEA/D with angle-based constrained dominance and baseline constraint handlers."""

from .constraints import COMPARATORS, make_comparator
from .core import EvaluationError, Individual, RandomStream, overall_violation, pareto_dominates
from .engine import AlgoConfig, RunResult, run
from .metrics import hv, igd, nondominated_filter, reference_point
from .problems import (
    Ellipse,
    LirLikeSpec,
    ProblemDefinition,
    builtin_problems,
    get_problem,
    list_problems,
    make_lir_like,
    register_problem,
    sample_reference_front,
)

__version__ = "0.1.0"
