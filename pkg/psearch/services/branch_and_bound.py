import logging
import math
import time
from typing import Dict, List, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict

from ..config import settings
from ..exceptions import InfeasibleError, LimitExceededError, NoSolutionError
from ..models import Instance, SearchLimits, SearchNode, Solution, SolveStatus, Walk
from ..utils import SearchTrace
from .evaluation import minimal_budget_from_arrivals, success_probability
from .graph import restricted_paths, shortest_distances

logger = logging.getLogger(__name__)


class SearchRestrictions(BaseModel):
    """Restrictions layered on the exact search by the BL and NB heuristics"""

    model_config = ConfigDict(frozen=True)

    name: str = 'optimal'
    visited_interior_only: bool = False  # never pass through an unvisited vertex
    require_purchase: bool = False  # every first visit counts a tier at the walk's budget
    bound_walk_weight: bool = False  # no walk heavier than the incumbent's
    simple_walks: bool = False  # no repeated vertices

    @property
    def exact(self) -> bool:
        return not (self.visited_interior_only or self.require_purchase or self.bound_walk_weight or self.simple_walks)


EXACT = SearchRestrictions()
BOUNDED_LENGTH = SearchRestrictions(name='bl', visited_interior_only=True, require_purchase=True, bound_walk_weight=True)
NO_BACKTRACK = BOUNDED_LENGTH.model_copy(update={'name': 'nb', 'simple_walks': True})


def _cheapest_useful_cost(instance: Instance) -> Dict[int, float]:
    """Cost of the cheapest positive-probability tier per vertex that has one"""
    cheapest = {}
    for v, site in enumerate(instance.sites):
        costs = [t.cost for t in site.tiers if t.prob > 0]
        if costs and v != instance.start:
            cheapest[v] = min(costs)
    return cheapest


def _check_size(instance: Instance, limits: SearchLimits) -> None:
    if limits.max_vertices is not None and instance.n > limits.max_vertices:
        raise LimitExceededError(f"instance has {instance.n} vertices, limit is {limits.max_vertices}")


def _children(
    instance: Instance,
    node: SearchNode,
    live: Set[int],
    interior: Set[int],
    simple: bool,
) -> List[Tuple[float, int, List[int]]]:
    """(distance, target, path) for every live target reachable as the next first arrival"""
    current = node.current
    if simple:
        found = [(instance.weight(current, v), v, [current, v]) for v in instance.graph[current] if v in live]
    else:
        paths = restricted_paths(instance.graph, current, interior)
        found = [(paths[v][0], v, paths[v][1]) for v in live if v in paths]
    return sorted(found, key=lambda item: (item[0], item[1]))


def restricted_min_budget(
    instance: Instance,
    p_succ: float,
    restrictions: SearchRestrictions = EXACT,
    limits: Optional[SearchLimits] = None,
    trace: Optional[SearchTrace] = None,
) -> Solution:
    """Min-Budget branch-and-bound over the order of first arrivals at sites.

    Each branch appends a restricted shortest path to one not-yet-visited site.
    Its interior may only use vertices that can no longer matter: visited ones,
    ones without any useful tier, and ones that could not count at any budget
    up to the incumbent's. Every node is scored with its minimal jump-set
    budget. A node is cut when even the incumbent budget cannot reach p_succ
    with every remaining site reached as early as possible.
    """
    if not 0 < p_succ <= 1:
        raise ValueError(f"p_succ must lie in (0, 1], got {p_succ}")
    limits = limits or SearchLimits()
    _check_size(instance, limits)
    tol = settings.tolerance

    available = instance.total_available_probability()
    if available < p_succ - tol:
        raise InfeasibleError(f"total available probability {available:.6f} < p_succ={p_succ}")

    sites = instance.sites
    cheapest = _cheapest_useful_cost(instance)
    targets = sorted(cheapest)
    useless = {v for v in instance.graph.nodes if v not in cheapest}
    dist = shortest_distances(instance.graph)
    stop_at = limits.deadline()

    best_budget = math.inf
    best_walk: Optional[Tuple[int, ...]] = None
    best_weight = math.inf
    expansions = 0
    exhausted = False

    def purchases(node: SearchNode, budget: float) -> bool:
        return all(sites[v].counted(budget - spent) >= 1 for spent, v in node.arrivals if v != instance.start)

    def search(node: SearchNode) -> None:
        nonlocal best_budget, best_walk, best_weight, expansions, exhausted
        if exhausted:
            return
        expansions += 1
        if expansions > limits.max_expansions or (expansions % 256 == 0 and time.monotonic() > stop_at):
            exhausted = True
            return
        if trace is not None:
            trace.emit('expand', node=expansions, vertex=node.current, spent=node.spent, depth=len(node.arrivals))

        budget = minimal_budget_from_arrivals(instance, node.arrivals, p_succ)
        if budget is not None and (not restrictions.require_purchase or purchases(node, budget)):
            improves = budget < best_budget - tol
            ties = abs(budget - best_budget) <= tol and best_walk is not None and node.vertices < best_walk
            if improves or ties:
                best_budget, best_walk, best_weight = budget, node.vertices, node.spent
                logger.debug(f"{restrictions.name} incumbent budget {budget:.6f} after {expansions} expansions")
                if trace is not None:
                    trace.emit('incumbent', value=budget, walk=list(node.vertices), expansions=expansions)

        visited = node.visited
        pruning = limits.prune and best_walk is not None
        cap = best_budget + tol
        dead = {v for v in targets if v not in visited and node.spent + cheapest[v] > cap} if pruning else set()
        live = {v for v in targets if v not in visited and v not in dead}
        if not live:
            return

        if pruning:
            failure = node.failure_product(instance, cap)
            reachable = dist[node.current]
            for v in live:
                if v in reachable:
                    failure *= 1.0 - sites[v].cumulative(cap - node.spent - reachable[v])
            if 1.0 - failure < p_succ - tol:
                return

        if restrictions.visited_interior_only:
            interior = set(visited)
        else:
            interior = set(visited) | useless | dead
        for d, v, path in _children(instance, node, live, interior, restrictions.simple_walks):
            arrival = node.spent + d
            if restrictions.bound_walk_weight and arrival > best_weight + tol:
                continue
            if restrictions.require_purchase and best_walk is not None and arrival + cheapest[v] > cap:
                continue
            search(SearchNode(
                vertices=node.vertices + tuple(path[1:]),
                spent=arrival,
                arrivals=node.arrivals + ((arrival, v),),
            ))

    root = SearchNode(vertices=(instance.start,), spent=0.0, arrivals=((0.0, instance.start),))
    search(root)

    if best_walk is None:
        if exhausted:
            raise LimitExceededError(f"{restrictions.name}: no plan found within {expansions} expansions")
        if restrictions.simple_walks:
            raise NoSolutionError(f"no simple walk reaches p_succ={p_succ}")
        raise InfeasibleError(f"{restrictions.name}: no admissible walk reaches p_succ={p_succ}")

    walk = Walk.of(instance, best_walk)
    if exhausted:
        logger.warning(f"{restrictions.name} search stopped after {expansions} expansions; budget {best_budget:.6f} is not proven minimal")
    else:
        logger.info(f"{restrictions.name} Min-Budget: budget {best_budget:.6f}, {len(walk)} walk vertices, {expansions} expansions")
    return Solution(
        walk=walk,
        budget=best_budget,
        probability=success_probability(instance, walk, best_budget),
        solver=restrictions.name,
        status=SolveStatus.LIMIT_EXCEEDED if exhausted else SolveStatus.OK,
        optimal=restrictions.exact and not exhausted,
        stats={'expansions': expansions, 'walk_weight': walk.travel_cost},
    )


def solve_min_budget_exact(
    instance: Instance,
    p_succ: float,
    limits: Optional[SearchLimits] = None,
    trace: Optional[SearchTrace] = None,
) -> Solution:
    return restricted_min_budget(instance, p_succ, EXACT, limits, trace)


def solve_max_prob_exact(
    instance: Instance,
    budget: float,
    limits: Optional[SearchLimits] = None,
    trace: Optional[SearchTrace] = None,
) -> Solution:
    """Max-Probability branch-and-bound over the order of first arrivals.

    The optimistic completion counts every uncounted useful site as if reached
    along its shortest path right now.
    """
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    limits = limits or SearchLimits()
    _check_size(instance, limits)
    tol = settings.tolerance

    sites = instance.sites
    cheapest = _cheapest_useful_cost(instance)
    targets = sorted(cheapest)
    useless = {v for v in instance.graph.nodes if v not in cheapest}
    dist = shortest_distances(instance.graph)
    stop_at = limits.deadline()

    best_prob = 0.0
    best_walk: Tuple[int, ...] = (instance.start,)
    expansions = 0
    exhausted = False
    certain = False

    def search(node: SearchNode, failure: float) -> None:
        nonlocal best_prob, best_walk, expansions, exhausted, certain
        if exhausted or certain:
            return
        expansions += 1
        if expansions > limits.max_expansions or (expansions % 256 == 0 and time.monotonic() > stop_at):
            exhausted = True
            return
        if trace is not None:
            trace.emit('expand', node=expansions, vertex=node.current, spent=node.spent, depth=len(node.arrivals))

        value = 1.0 - failure
        if value > best_prob + tol:
            best_prob, best_walk = value, node.vertices
            logger.debug(f"Max-Probability incumbent {value:.6f} after {expansions} expansions")
            if trace is not None:
                trace.emit('incumbent', value=value, walk=list(node.vertices), expansions=expansions)
            if best_prob >= 1.0 - tol:
                certain = True
                return

        visited = node.visited
        dead = {v for v in targets if v not in visited and node.spent + cheapest[v] > budget + tol} if limits.prune else set()
        live = {v for v in targets if v not in visited and v not in dead}
        if not live:
            return

        if limits.prune:
            optimistic = failure
            reachable = dist[node.current]
            for v in live:
                if v in reachable:
                    optimistic *= 1.0 - sites[v].cumulative(budget - node.spent - reachable[v])
            if 1.0 - optimistic <= best_prob + tol:
                return

        interior = set(visited) | useless | dead
        for d, v, path in _children(instance, node, live, interior, simple=False):
            arrival = node.spent + d
            if limits.prune and arrival > budget + tol:
                continue
            gained = sites[v].cumulative(budget - arrival)
            search(
                SearchNode(
                    vertices=node.vertices + tuple(path[1:]),
                    spent=arrival,
                    arrivals=node.arrivals + ((arrival, v),),
                ),
                failure * (1.0 - gained),
            )

    search(SearchNode(vertices=(instance.start,), spent=0.0, arrivals=((0.0, instance.start),)), 1.0)

    walk = Walk.of(instance, best_walk)
    if exhausted:
        logger.warning(f"Max-Probability search stopped after {expansions} expansions; probability {best_prob:.6f} is not proven maximal")
    else:
        logger.info(f"Optimal Max-Probability: {best_prob:.6f} at budget {budget}, {expansions} expansions")
    return Solution(
        walk=walk,
        budget=budget,
        probability=success_probability(instance, walk, budget),
        solver='optimal',
        status=SolveStatus.LIMIT_EXCEEDED if exhausted else SolveStatus.OK,
        optimal=not exhausted,
        stats={'expansions': expansions, 'walk_weight': walk.travel_cost},
    )
