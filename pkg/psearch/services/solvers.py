import logging
from typing import Callable, Dict, Optional

from ..models import Instance, Solution, SolverOptions
from ..utils import SearchTrace
from .branch_and_bound import solve_max_prob_exact, solve_min_budget_exact
from .deadline_tsp import ExactDtspSolver, GreedyDtspSolver, approx_max_probability
from .heuristics import aco_min_budget, bl_min_budget, greedy_max_probability, greedy_min_budget, nb_min_budget
from .kmst import kmst_min_budget

logger = logging.getLogger(__name__)

# (instance, p_succ or budget, options, trace) -> Solution
SolverFn = Callable[[Instance, float, SolverOptions, Optional[SearchTrace]], Solution]

MIN_BUDGET_SOLVERS: Dict[str, SolverFn] = {
    'optimal': lambda instance, p_succ, options, trace: solve_min_budget_exact(instance, p_succ, options.limits, trace),
    'greedy': lambda instance, p_succ, options, trace: greedy_min_budget(instance, p_succ, options.unvisited_only, options.score_mode),
    'aco': lambda instance, p_succ, options, trace: aco_min_budget(
        instance, p_succ, options.aco.model_copy(update={'score_mode': options.score_mode}), options.unvisited_only),
    'bl': lambda instance, p_succ, options, trace: bl_min_budget(instance, p_succ, options.limits, trace),
    'nb': lambda instance, p_succ, options, trace: nb_min_budget(instance, p_succ, options.limits, trace),
    'kmst': lambda instance, p_succ, options, trace: kmst_min_budget(instance, p_succ, options.kmst_mode, options.limits),
}

MAX_PROBABILITY_SOLVERS: Dict[str, SolverFn] = {
    'optimal': lambda instance, budget, options, trace: solve_max_prob_exact(instance, budget, options.limits, trace),
    'approx': lambda instance, budget, options, trace: approx_max_probability(
        instance, budget, ExactDtspSolver(options.limits), options.rounding, options.truncate),
    'approx-greedy': lambda instance, budget, options, trace: approx_max_probability(
        instance, budget, GreedyDtspSolver(), options.rounding, options.truncate),
    'greedy': lambda instance, budget, options, trace: greedy_max_probability(instance, budget, options.score_mode),
}


def solve_min_budget(
    name: str,
    instance: Instance,
    p_succ: float,
    options: Optional[SolverOptions] = None,
    trace: Optional[SearchTrace] = None,
) -> Solution:
    """Run a registered Min-Budget solver by name"""
    if name not in MIN_BUDGET_SOLVERS:
        raise ValueError(f"unknown Min-Budget solver '{name}', expected one of {sorted(MIN_BUDGET_SOLVERS)}")
    logger.info(f"Min-Budget solver {name}: p_succ={p_succ}, {instance.n} vertices")
    return MIN_BUDGET_SOLVERS[name](instance, p_succ, options or SolverOptions(), trace)


def solve_max_probability(
    name: str,
    instance: Instance,
    budget: float,
    options: Optional[SolverOptions] = None,
    trace: Optional[SearchTrace] = None,
) -> Solution:
    """Run a registered Max-Probability solver by name"""
    if name not in MAX_PROBABILITY_SOLVERS:
        raise ValueError(f"unknown Max-Probability solver '{name}', expected one of {sorted(MAX_PROBABILITY_SOLVERS)}")
    logger.info(f"Max-Probability solver {name}: budget={budget}, {instance.n} vertices")
    return MAX_PROBABILITY_SOLVERS[name](instance, budget, options or SolverOptions(), trace)
