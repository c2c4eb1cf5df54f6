import pytest

from psearch.exceptions import InfeasibleError, LimitExceededError
from psearch.models import SearchLimits, SearchNode, SolveStatus
from psearch.services.branch_and_bound import solve_max_prob_exact, solve_min_budget_exact
from psearch.services.evaluation import arrivals_of, minimal_budget_for_walk, success_from_arrivals, success_probability
from psearch.utils import SearchTrace

from .conftest import brute_max_probability, brute_min_budget, make_instance, random_instance


def _target(instance, fraction=0.7):
    available = instance.total_available_probability()
    return round(available * fraction, 4)


def test_single_site_min_budget(single_site):
    solution = solve_min_budget_exact(single_site, 0.5)
    assert solution.budget == 5.0
    assert solution.walk.vertices == (0, 1)
    assert solution.optimal
    assert solution.status == SolveStatus.OK


def test_target_above_available_probability(single_site):
    with pytest.raises(InfeasibleError):
        solve_min_budget_exact(single_site, 0.6)


def test_star_needs_backtracking(star):
    solution = solve_min_budget_exact(star, 0.75)
    assert solution.walk.vertices == (0, 1, 0, 2)
    assert solution.budget == 5.0


@pytest.mark.parametrize("seed", range(30))
def test_min_budget_matches_enumeration(seed):
    instance = random_instance(seed)
    p_succ = _target(instance)
    if p_succ <= 0:
        pytest.skip("no probability mass")
    solution = solve_min_budget_exact(instance, p_succ)
    assert solution.budget == pytest.approx(brute_min_budget(instance, p_succ))
    assert minimal_budget_for_walk(instance, solution.walk, p_succ) == pytest.approx(solution.budget)
    assert solution.probability >= p_succ - 1e-9


def test_five_vertices_no_worse_than_short_walks():
    for seed in range(10):
        instance = random_instance(seed, n=5)
        p_succ = _target(instance, 0.6)
        if p_succ <= 0:
            continue
        short = brute_min_budget(instance, p_succ, max_edges=6)
        solution = solve_min_budget_exact(instance, p_succ)
        if short is not None:
            assert solution.budget <= short + 1e-9


def test_pruning_does_not_change_min_budget():
    for seed in range(15):
        instance = random_instance(seed, n=5)
        p_succ = _target(instance)
        if p_succ <= 0:
            continue
        pruned = solve_min_budget_exact(instance, p_succ)
        full = solve_min_budget_exact(instance, p_succ, SearchLimits(prune=False))
        assert pruned.budget == pytest.approx(full.budget)


def test_zero_budget_max_probability(single_site):
    solution = solve_max_prob_exact(single_site, 0.0)
    assert solution.walk.vertices == (0,)
    assert solution.probability == 0.0


def test_certain_site_dominates():
    instance = make_instance(3, [(0, 1, 1.0), (0, 2, 1.0)], {1: [(1.0, 0.4)], 2: [(1.0, 1.0)]})
    solution = solve_max_prob_exact(instance, 2.0)
    assert solution.probability == 1.0
    assert solution.walk.vertices == (0, 2)


@pytest.mark.parametrize("seed", range(30))
@pytest.mark.parametrize("budget", [4.0, 9.0])
def test_max_probability_matches_enumeration(seed, budget):
    instance = random_instance(seed)
    solution = solve_max_prob_exact(instance, budget)
    assert solution.probability == pytest.approx(brute_max_probability(instance, budget), abs=1e-9)
    assert solution.walk.travel_cost <= budget + 1e-9
    assert solution.optimal


def test_pruning_does_not_change_max_probability():
    for seed in range(15):
        instance = random_instance(seed, n=5)
        pruned = solve_max_prob_exact(instance, 8.0)
        full = solve_max_prob_exact(instance, 8.0, SearchLimits(prune=False))
        assert pruned.probability == pytest.approx(full.probability, abs=1e-9)


def test_min_budget_and_max_probability_are_dual():
    for seed in range(20):
        instance = random_instance(seed)
        p_succ = _target(instance)
        if p_succ <= 0:
            continue
        budget = solve_min_budget_exact(instance, p_succ).budget
        assert solve_max_prob_exact(instance, budget).probability >= p_succ - 2e-9
        if budget > 0:
            assert solve_max_prob_exact(instance, budget - 1e-6).probability < p_succ - 1e-9


def test_trace_incumbents_improve_monotonically(star):
    instance = random_instance(4, n=5)
    trace = SearchTrace()
    solution = solve_min_budget_exact(star, 0.75, trace=trace)
    values = [event['value'] for event in trace.incumbents()]
    assert values
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert values[-1] == solution.budget

    trace = SearchTrace(expansions=False)
    solution = solve_max_prob_exact(instance, 8.0, trace=trace)
    assert all(event['event'] == 'incumbent' for event in trace.events)
    values = [event['value'] for event in trace.incumbents()]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_trace_writes_json_lines(tmp_path, single_site):
    path = tmp_path / "trace.jsonl"
    with open(path, 'w', encoding='utf-8') as stream:
        trace = SearchTrace(stream)
        solve_min_budget_exact(single_site, 0.5, trace=trace)
        trace.close()
    lines = path.read_text(encoding='utf-8').splitlines()
    assert len(lines) == trace.count > 0
    assert trace.events == []
    assert sum('"event": "incumbent"' in line for line in lines) == len(trace.incumbents()) > 0


def test_expansion_limit_without_incumbent(single_site):
    with pytest.raises(LimitExceededError):
        solve_min_budget_exact(single_site, 0.5, SearchLimits(max_expansions=1))


def test_vertex_limit(star):
    with pytest.raises(LimitExceededError):
        solve_max_prob_exact(star, 5.0, SearchLimits(max_vertices=2))


def test_max_probability_limit_flags_incumbent(star):
    solution = solve_max_prob_exact(star, 10.0, SearchLimits(max_expansions=2))
    assert solution.status == SolveStatus.LIMIT_EXCEEDED
    assert not solution.optimal
    assert solution.probability == success_probability(star, solution.walk, 10.0)


def test_search_node_matches_walk_evaluation():
    instance = make_instance(3, [(0, 1, 1.0), (1, 2, 2.0)], {1: [(1.0, 0.3), (4.0, 0.2)], 2: [(2.0, 0.5)]})
    node = SearchNode(vertices=(0, 1, 2), spent=3.0, arrivals=((0.0, 0), (1.0, 1), (3.0, 2)))
    assert node.current == 2
    assert node.visited == frozenset({0, 1, 2})
    for budget in (0.0, 2.0, 5.0, 6.0):
        assert 1.0 - node.failure_product(instance, budget) == pytest.approx(
            success_from_arrivals(instance, node.arrivals, budget))
    assert node.counted(instance, 5.0) == frozenset({(1, 0), (1, 1), (2, 0)})
    assert node.counted(instance, 2.0) == frozenset({(1, 0)})


def test_walk_arrivals_feed_the_same_evaluation(star):
    solution = solve_min_budget_exact(star, 0.75)
    arrivals = arrivals_of(solution.walk)
    assert success_from_arrivals(star, arrivals, solution.budget) == solution.probability
