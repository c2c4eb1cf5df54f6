import networkx as nx
import numpy as np
import pytest

from psearch.exceptions import LimitExceededError
from psearch.models import DtspInstance, SearchLimits
from psearch.services.branch_and_bound import solve_max_prob_exact
from psearch.services.deadline_tsp import GreedyDtspSolver, approx_max_probability, dtsp_prize, dtsp_solve_exact
from psearch.services.evaluation import prize_of_probability

from .conftest import brute_dtsp, make_instance, random_instance


def _dtsp(edges, prize, deadline, root=0):
    graph = nx.Graph()
    graph.add_nodes_from(range(len(prize)))
    graph.add_weighted_edges_from(edges)
    return DtspInstance(graph=nx.freeze(graph), root=root, prize=tuple(prize), deadline=tuple(deadline))


def _random_dtsp(seed, n=4):
    rng = np.random.default_rng(seed)
    instance = random_instance(seed, n=n, extra_edges=2)
    prize = [0.0] + [float(rng.integers(0, 4)) for _ in range(n - 1)]
    deadline = [0.0] + [float(rng.integers(0, 12)) for _ in range(n - 1)]
    return _dtsp(list(instance.graph.edges(data='weight')), prize, deadline)


def test_root_only_walk_collects_nothing():
    dtsp = _dtsp([(0, 1, 4.0)], [0.0, 1.0], [0.0, 7.0])
    solution = dtsp_prize(dtsp, [0])
    assert solution.total_prize == 0.0
    assert solution.collected == frozenset()


def test_prize_collected_before_deadline():
    dtsp = _dtsp([(0, 1, 4.0)], [0.0, 1.0], [0.0, 7.0])
    solution = dtsp_prize(dtsp, [0, 1])
    assert solution.total_prize == 1.0
    assert solution.collected == frozenset({1})


def test_deadline_missed():
    dtsp = _dtsp([(0, 1, 4.0)], [0.0, 1.0], [0.0, 3.0])
    assert dtsp_prize(dtsp, [0, 1]).total_prize == 0.0


def test_only_first_arrival_collects():
    dtsp = _dtsp([(0, 1, 4.0), (1, 2, 1.0)], [0.0, 1.0, 1.0], [0.0, 3.0, 20.0])
    # late at 1, and coming back later does not collect it either
    assert dtsp_prize(dtsp, [0, 1, 2, 1]).total_prize == 1.0


def test_nothing_collectable():
    dtsp = _dtsp([(0, 1, 4.0), (0, 2, 5.0)], [0.0, 1.0, 1.0], [0.0, 3.0, 4.0])
    solution = dtsp_solve_exact(dtsp)
    assert solution.total_prize == 0.0
    assert solution.walk == (0,)
    assert solution.optimal


def test_three_vertices_one_reachable():
    dtsp = _dtsp([(0, 1, 1.0), (1, 2, 5.0)], [0.0, 1.0, 1.0], [0.0, 2.0, 4.0])
    solution = dtsp_solve_exact(dtsp)
    assert solution.total_prize == brute_dtsp(dtsp, 4) == 1.0


@pytest.mark.parametrize("seed", range(40))
def test_exact_matches_enumeration(seed):
    dtsp = _random_dtsp(seed)
    solution = dtsp_solve_exact(dtsp)
    assert solution.total_prize == pytest.approx(brute_dtsp(dtsp, 9))
    assert dtsp_prize(dtsp, solution.walk).total_prize == pytest.approx(solution.total_prize)


def test_exact_without_pruning_agrees():
    for seed in range(10):
        dtsp = _random_dtsp(seed)
        pruned = dtsp_solve_exact(dtsp)
        full = dtsp_solve_exact(dtsp, SearchLimits(prune=False))
        assert pruned.total_prize == pytest.approx(full.total_prize)


def test_greedy_never_beats_exact():
    solver = GreedyDtspSolver()
    for seed in range(20):
        dtsp = _random_dtsp(seed, n=5)
        greedy = solver.solve(dtsp)
        assert not greedy.optimal
        assert greedy.total_prize <= dtsp_solve_exact(dtsp).total_prize + 1e-9


def test_vertex_limit():
    dtsp = _random_dtsp(0, n=5)
    with pytest.raises(LimitExceededError):
        dtsp_solve_exact(dtsp, SearchLimits(max_vertices=3))


def test_expansion_limit_returns_flagged_incumbent():
    dtsp = _dtsp([(0, 1, 1.0), (1, 2, 1.0)], [0.0, 1.0, 1.0], [0.0, 5.0, 5.0])
    solution = dtsp_solve_exact(dtsp, SearchLimits(max_expansions=1))
    assert not solution.optimal


def test_approx_single_site(single_site):
    solution = approx_max_probability(single_site, 5.0)
    assert solution.walk.vertices == (0, 1)
    assert solution.probability == 0.5
    assert solution.solver == 'approx-exact'


def test_approx_budget_below_everything(single_site):
    solution = approx_max_probability(single_site, 4.0)
    assert solution.walk.vertices == (0,)
    assert solution.probability == 0.0


@pytest.mark.parametrize("seed", range(25))
def test_approx_without_rounding_matches_exact_search(seed):
    instance = random_instance(seed, n=4, max_tiers=2)
    budget = 8.0
    approx = approx_max_probability(instance, budget, rounding=False)
    exact = solve_max_prob_exact(instance, budget)
    assert approx.probability == pytest.approx(exact.probability, abs=1e-9)
    assert approx.optimal


def test_rounded_approx_is_feasible_and_bounded():
    for seed in range(25):
        instance = random_instance(seed, n=4)
        approx = approx_max_probability(instance, 8.0)
        assert not approx.optimal
        assert approx.probability <= solve_max_prob_exact(instance, 8.0).probability + 1e-9


def test_approx_with_greedy_solver():
    instance = make_instance(3, [(0, 1, 1.0), (1, 2, 1.0)], {1: [(1.0, 0.5)], 2: [(1.0, 0.5)]})
    solution = approx_max_probability(instance, 3.0, GreedyDtspSolver())
    assert solution.walk.vertices == (0, 1, 2)
    assert solution.probability == pytest.approx(0.75)
    assert solution.solver == 'approx-greedy'



def test_rounded_approx_keeps_its_prize_share_of_the_optimum():
    for seed in range(25):
        instance = random_instance(seed, n=5, max_tiers=2)
        exact = solve_max_prob_exact(instance, 8.0)
        if exact.probability == 0:
            continue
        approx = approx_max_probability(instance, 8.0)
        share = approx.stats['prize'] / prize_of_probability(exact.probability)
        assert share <= 1 + 1e-9
        assert approx.probability >= share * exact.probability - 1e-9


def test_fractional_power_lower_bound():
    rng = np.random.default_rng(0)
    p = rng.random(100_000)
    r = 1.0 - rng.random(100_000)
    assert np.all(1.0 - (1.0 - p) ** r >= r * p - 1e-12)
