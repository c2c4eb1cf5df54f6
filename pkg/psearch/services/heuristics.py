import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..exceptions import StuckError
from ..models import AcoParams, Instance, SearchLimits, Solution, Walk
from ..utils import SearchTrace
from .branch_and_bound import BOUNDED_LENGTH, NO_BACKTRACK, restricted_min_budget
from .evaluation import collected_prize, success_from_arrivals, success_probability
from .graph import restricted_paths, restricted_shortest_path

logger = logging.getLogger(__name__)

# (score, vertex, tier index, restricted distance, path)
Candidate = Tuple[float, int, int, float, List[int]]


def _score(cumulative: float, distance: float, cost: float, score_mode: str) -> float:
    eps = settings.distance_epsilon
    if score_mode == 'additive':
        return cumulative / max(distance + cost, eps)
    return cumulative / (max(distance, eps) * max(cost, eps))


def greedy_score(instance: Instance, walk: Walk, v: int, tier_index: int, score_mode: str = 'product') -> float:
    """S(P, v, c_i): cumulative probability up to tier i over (distance * cost).

    The distance is the shortest path from the walk's end to v through walk
    vertices only; zero distances and costs are replaced by a small epsilon.
    """
    distance, _ = restricted_shortest_path(instance, walk.vertices[-1], v, allowed=walk.vertices)
    tiers = instance.sites[v].tiers
    cumulative = math.fsum(t.prob for t in tiers[:tier_index + 1])
    return _score(cumulative, distance, tiers[tier_index].cost, score_mode)


class _Construction:
    """A walk under construction with its first arrivals and running budget"""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.vertices = [instance.start]
        self.first_arrival: Dict[int, float] = {instance.start: 0.0}
        self.arrivals: List[Tuple[float, int]] = [(0.0, instance.start)]
        self.traveled = 0.0
        self.budget = 0.0

    def success(self, budget: Optional[float] = None) -> float:
        return success_from_arrivals(self.instance, self.arrivals, self.budget if budget is None else budget)

    def candidates(self, unvisited_only: bool, score_mode: str, cap: Optional[float] = None) -> List[Candidate]:
        """Scored (vertex, tier) choices on the frontier, in ascending vertex then cost order.

        A visited site stays a candidate while a tier is still uncounted at its
        first arrival. With ``cap`` set only choices affordable within it are returned.
        """
        tol = settings.tolerance
        paths = restricted_paths(self.instance.graph, self.vertices[-1], set(self.vertices))
        found = []
        for v in sorted(paths):
            site = self.instance.sites[v]
            if not site.tiers:
                continue
            already = site.counted(self.budget - self.first_arrival[v]) if v in self.first_arrival else 0
            if unvisited_only and already == len(site.tiers):
                continue
            distance, path = paths[v]
            arrival = self.first_arrival.get(v, self.traveled + distance)
            cumulative = 0.0
            for i, tier in enumerate(site.tiers):
                cumulative += tier.prob
                if i < already:
                    continue
                if cap is not None and arrival + tier.cost > cap + tol:
                    continue
                score = _score(cumulative, distance, tier.cost, score_mode)
                if score > 0:
                    found.append((score, v, i, distance, path))
        return found

    def advance(self, candidate: Candidate, raise_budget: bool = True) -> None:
        _, v, i, distance, path = candidate
        if v not in self.first_arrival:
            self.first_arrival[v] = self.traveled + distance
            self.arrivals.append((self.traveled + distance, v))
        # tiers count at the first arrival
        if raise_budget:
            self.budget = max(self.budget, self.first_arrival[v] + self.instance.sites[v].tiers[i].cost)
        self.vertices.extend(path[1:])
        self.traveled += distance


def _construct_min_budget(
    instance: Instance,
    p_succ: float,
    pick: Callable[[List[Candidate]], Candidate],
    unvisited_only: bool,
    score_mode: str,
) -> _Construction:
    tol = settings.tolerance
    walk = _Construction(instance)
    while walk.success() < p_succ - tol:
        candidates = walk.candidates(unvisited_only, score_mode)
        if not candidates:
            raise StuckError(f"frontier exhausted at probability {walk.success():.6f} < p_succ={p_succ}")
        walk.advance(pick(candidates))
    return walk


def _pick_best(candidates: List[Candidate]) -> Candidate:
    # max keeps the first maximum: smallest vertex id, then smallest cost
    return max(candidates, key=lambda c: c[0])


def greedy_min_budget(instance: Instance, p_succ: float, unvisited_only: bool = True, score_mode: str = 'product') -> Solution:
    """Append the best-scoring (site, cost) on the frontier until p_succ is reached.

    The budget grows to cover travel to each chosen site plus its chosen cost.
    """
    if not 0 < p_succ <= 1:
        raise ValueError(f"p_succ must lie in (0, 1], got {p_succ}")
    built = _construct_min_budget(instance, p_succ, _pick_best, unvisited_only, score_mode)
    walk = Walk.of(instance, built.vertices)
    logger.info(f"Greedy Min-Budget: budget {built.budget:.6f}, {len(walk)} walk vertices")
    return Solution(
        walk=walk,
        budget=built.budget,
        probability=success_probability(instance, walk, built.budget),
        solver='greedy',
        stats={'walk_weight': walk.travel_cost},
    )


def greedy_max_probability(instance: Instance, budget: float, score_mode: str = 'product') -> Solution:
    """Greedy construction under a fixed budget: only choices still affordable are taken"""
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    tol = settings.tolerance
    built = _Construction(instance)
    built.budget = budget
    while built.success() < 1.0 - tol:
        candidates = built.candidates(True, score_mode, cap=budget)
        if not candidates:
            break
        built.advance(_pick_best(candidates), raise_budget=False)
    walk = Walk.of(instance, built.vertices)
    probability = success_probability(instance, walk, budget)
    logger.info(f"Greedy Max-Probability: {probability:.6f} at budget {budget}")
    return Solution(walk=walk, budget=budget, probability=probability, solver='greedy', stats={'walk_weight': walk.travel_cost})


class PheromoneMap:
    """Per-edge pheromone levels; edges never reinforced share one evaporating default"""

    def __init__(self, initial: float = 1.0):
        self._default = initial
        self._levels: Dict[Tuple[int, int], float] = {}

    @staticmethod
    def _key(u: int, v: int) -> Tuple[int, int]:
        return (u, v) if u <= v else (v, u)

    def level(self, u: int, v: int) -> float:
        return self._levels.get(self._key(u, v), self._default)

    def average(self, path: Sequence[int]) -> float:
        """Mean level over the path's edges; the default level for an edgeless path"""
        levels = [self.level(u, v) for u, v in zip(path, path[1:])]
        return sum(levels) / len(levels) if levels else self._default

    def evaporate(self, rate: float) -> None:
        floor = settings.pheromone_floor
        self._default = max(self._default * (1.0 - rate), floor)
        for key in self._levels:
            self._levels[key] = max(self._levels[key] * (1.0 - rate), floor)

    def set_level(self, u: int, v: int, value: float) -> None:
        if not math.isfinite(value):
            raise ValueError(f"pheromone level on ({u}, {v}) is not finite")
        self._levels[self._key(u, v)] = max(value, settings.pheromone_floor)

    def reinforce(self, instance: Instance, walk: Walk, reward: float) -> None:
        """Set every walk edge (u, v) to w(u, v) * reward / w(walk)"""
        total = walk.travel_cost
        if total <= 0:
            return
        for u, v in walk.edges:
            self.set_level(u, v, instance.weight(u, v) * reward / total)

    def levels(self) -> List[float]:
        return [self._default, *self._levels.values()]


def _reward(instance: Instance, walk: Walk, budget: float, mode: str) -> float:
    if mode == 'prize':
        return collected_prize(instance, walk, budget)
    return float(sum(1 for _, v in walk.first_arrivals() if instance.sites[v].tiers))


def aco_min_budget(
    instance: Instance,
    p_succ: float,
    params: Optional[AcoParams] = None,
    unvisited_only: bool = True,
) -> Solution:
    """Ant colony search over greedy-style constructions.

    Each iteration one ant samples (site, cost) choices with probability
    proportional to score times the mean pheromone on the path to the site.
    Levels evaporate after every iteration; each strict improvement on the
    incumbent resets the pheromone on its edges. When every ant gets stuck
    the greedy plan is returned instead.
    """
    if not 0 < p_succ <= 1:
        raise ValueError(f"p_succ must lie in (0, 1], got {p_succ}")
    params = params or AcoParams()
    tol = settings.tolerance

    best_vertices: Optional[Sequence[int]] = None
    best_budget = math.inf

    rng = np.random.default_rng(params.seed)
    pheromone = PheromoneMap(params.initial_pheromone)
    stuck = 0
    improvements = 0

    def pick(candidates: List[Candidate]) -> Candidate:
        weights = np.array([c[0] * pheromone.average(c[4]) for c in candidates], dtype=float)
        total = weights.sum()
        if not total > 0 or not np.isfinite(total):
            return _pick_best(candidates)
        return candidates[int(rng.choice(len(candidates), p=weights / total))]

    for iteration in range(params.iterations):
        try:
            built = _construct_min_budget(instance, p_succ, pick, unvisited_only, params.score_mode)
        except StuckError:
            stuck += 1
            pheromone.evaporate(params.evaporation)
            continue
        pheromone.evaporate(params.evaporation)
        if built.budget < best_budget - tol:
            best_vertices, best_budget = built.vertices, built.budget
            improvements += 1
            walk = Walk.of(instance, built.vertices)
            pheromone.reinforce(instance, walk, _reward(instance, walk, built.budget, params.reward))
            logger.debug(f"ACO iteration {iteration}: new incumbent budget {best_budget:.6f}")

    stats = {'improvements': improvements, 'stuck': stuck, 'fallback': best_vertices is None}
    if best_vertices is None:
        logger.info("ACO: every construction got stuck, falling back to the greedy plan")
        greedy = greedy_min_budget(instance, p_succ, unvisited_only, params.score_mode)
        return greedy.model_copy(update={'solver': 'aco', 'stats': {**greedy.stats, **stats}})

    walk = Walk.of(instance, best_vertices)
    logger.info(f"ACO Min-Budget: budget {best_budget:.6f}, {improvements} improvements, {stuck} stuck ants")
    return Solution(
        walk=walk,
        budget=best_budget,
        probability=success_probability(instance, walk, best_budget),
        solver='aco',
        stats={'walk_weight': walk.travel_cost, **stats},
    )


def bl_min_budget(
    instance: Instance,
    p_succ: float,
    limits: Optional[SearchLimits] = None,
    trace: Optional[SearchTrace] = None,
) -> Solution:
    """Bounded-Length: the exact search restricted to walks that buy at every first visit,
    never pass through unvisited vertices and are no heavier than the incumbent walk"""
    return restricted_min_budget(instance, p_succ, BOUNDED_LENGTH, limits, trace)


def nb_min_budget(
    instance: Instance,
    p_succ: float,
    limits: Optional[SearchLimits] = None,
    trace: Optional[SearchTrace] = None,
) -> Solution:
    """No-Backtrack: Bounded-Length over simple walks only; may find no solution"""
    return restricted_min_budget(instance, p_succ, NO_BACKTRACK, limits, trace)
