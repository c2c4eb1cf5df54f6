"""Services module"""

from .branch_and_bound import solve_max_prob_exact, solve_min_budget_exact
from .deadline_tsp import ExactDtspSolver, GreedyDtspSolver, approx_max_probability
from .experiment import ExperimentRunner, run_experiment
from .heuristics import aco_min_budget, bl_min_budget, greedy_max_probability, greedy_min_budget, nb_min_budget
from .kmst import kmst_min_budget
from .simulation import simulate
from .solvers import solve_max_probability, solve_min_budget

__all__ = [
    'solve_max_prob_exact', 'solve_min_budget_exact',
    'ExactDtspSolver', 'GreedyDtspSolver', 'approx_max_probability',
    'ExperimentRunner', 'run_experiment',
    'aco_min_budget', 'bl_min_budget', 'greedy_max_probability', 'greedy_min_budget', 'nb_min_budget',
    'kmst_min_budget',
    'simulate',
    'solve_max_probability', 'solve_min_budget',
]
