import logging
import math
from typing import List, Optional, Sequence, Tuple

from ..config import settings
from ..exceptions import InfeasibleError
from ..models import CollectionEvent, Instance, Walk

logger = logging.getLogger(__name__)


def prize_of_probability(p: float) -> float:
    """-log(1 - p), clamped at the configured prize cap"""
    if p >= 1.0:
        return settings.prize_cap
    return min(-math.log1p(-p), settings.prize_cap)


def collection_events(instance: Instance, walk: Walk, budget: float) -> List[CollectionEvent]:
    """Tiers counted along the walk under the first-arrival rule.

    Budgets only shrink along a walk, so every countable tier of a vertex is
    counted at its first arrival; pass-through arrivals count too.
    """
    events = []
    for j, v in walk.first_arrivals():
        site = instance.sites[v]
        if not site.tiers:
            continue
        spent = walk.prefix_cost[j]
        counted = site.counted(budget - spent)
        if counted:
            events.append(CollectionEvent(vertex=v, arrival_spent=spent, tiers_counted=range(counted)))
    return events


def failure_probability(instance: Instance, walk: Walk, budget: float) -> float:
    failure = 1.0
    for j, v in walk.first_arrivals():
        site = instance.sites[v]
        if site.tiers:
            failure *= 1.0 - site.cumulative(budget - walk.prefix_cost[j])
    return max(failure, 0.0)


def success_probability(instance: Instance, walk: Walk, budget: float) -> float:
    """1 - prod over visited vertices of (1 - F_v(budget - arrival_spent))"""
    return min(1.0, 1.0 - failure_probability(instance, walk, budget))


def arrivals_of(walk: Walk) -> List[Tuple[float, int]]:
    """(arrival_spent, vertex) for every first arrival"""
    return [(walk.prefix_cost[j], v) for j, v in walk.first_arrivals()]


def success_from_arrivals(instance: Instance, arrivals: Sequence[Tuple[float, int]], budget: float) -> float:
    failure = 1.0
    for spent, v in arrivals:
        site = instance.sites[v]
        if site.tiers:
            failure *= 1.0 - site.cumulative(budget - spent)
    return min(1.0, 1.0 - max(failure, 0.0))


def candidate_budgets(instance: Instance, walk: Walk) -> List[float]:
    """Jump set of the walk: budgets at which its success probability can change, ascending"""
    return _candidates(instance, arrivals_of(walk))


def _candidates(instance: Instance, arrivals: Sequence[Tuple[float, int]]) -> List[float]:
    candidates = {0.0}
    for spent, v in arrivals:
        candidates.update(spent + tier.cost for tier in instance.sites[v].tiers)
    return sorted(candidates)


def minimal_budget_from_arrivals(instance: Instance, arrivals: Sequence[Tuple[float, int]], p_succ: float) -> Optional[float]:
    """Smallest jump-set budget reaching p_succ for the given first arrivals, None if none does"""
    if p_succ <= 0:
        return 0.0
    target = p_succ - settings.tolerance
    for budget in _candidates(instance, arrivals):
        if success_from_arrivals(instance, arrivals, budget) >= target:
            return budget
    return None


def minimal_budget_for_walk(instance: Instance, walk: Walk, p_succ: float) -> float:
    """Smallest jump-set budget under which the walk reaches p_succ.

    Raises InfeasibleError when even the largest candidate falls short.
    """
    if not 0 <= p_succ <= 1:
        raise ValueError(f"p_succ must lie in [0, 1], got {p_succ}")
    budget = minimal_budget_from_arrivals(instance, arrivals_of(walk), p_succ)
    if budget is None:
        best = success_probability(instance, walk, candidate_budgets(instance, walk)[-1])
        raise InfeasibleError(f"walk reaches at most {best:.6f} < p_succ={p_succ}")
    return budget


def collected_prize(instance: Instance, walk: Walk, budget: float) -> float:
    """Sum of -log(1 - F_v) over counting events, i.e. -log(1 - success_probability)"""
    if success_probability(instance, walk, budget) >= 1.0:
        return settings.prize_cap
    total = 0.0
    for event in collection_events(instance, walk, budget):
        total += -math.log1p(-instance.sites[event.vertex].cumulative(budget - event.arrival_spent))
    return total
