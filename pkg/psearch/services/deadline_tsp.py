import logging
import math
import time
from typing import List, Optional, Protocol, Sequence, Set, Tuple

from ..config import settings
from ..exceptions import LimitExceededError
from ..models import DtspInstance, DtspSolution, Instance, SearchLimits, Solution, SolveStatus, Walk
from .evaluation import collected_prize, success_probability
from .graph import restricted_paths, shortest_distances
from .transforms import conditional_lower_bound, map_walk_back, prize_ledger, round_prizes, to_deadline_tsp, to_single_cost, truncate_saturated_tiers

logger = logging.getLogger(__name__)


def dtsp_prize(dtsp: DtspInstance, walk: Sequence[int]) -> DtspSolution:
    """Score a walk from the root: a non-root vertex is collected when first reached no later than its deadline"""
    walk = tuple(walk) or (dtsp.root,)
    if walk[0] != dtsp.root:
        raise ValueError(f"walk must begin at the root {dtsp.root}")
    tol = settings.tolerance
    length = 0.0
    seen = set()
    collected = set()
    for i, v in enumerate(walk):
        if i:
            u = walk[i - 1]
            if not dtsp.graph.has_edge(u, v):
                raise ValueError(f"walk uses missing edge ({u}, {v})")
            length += dtsp.length(u, v)
        if v in seen:
            continue
        seen.add(v)
        if v != dtsp.root and length <= dtsp.deadline[v] + tol:
            collected.add(v)
    total = math.fsum(dtsp.prize[v] for v in collected)
    return DtspSolution(walk=walk, total_prize=total, collected=frozenset(collected))


class DtspSolver(Protocol):
    name: str

    def solve(self, dtsp: DtspInstance) -> DtspSolution:
        ...


class ExactDtspSolver:
    """Branch-and-bound over the order in which prizes are collected.

    Between two collections the walk follows a shortest path whose interior
    avoids every still-collectable prize vertex, so each branch adds exactly
    one first arrival. Late arrivals are branches too: they collect nothing
    but turn the vertex into a pass-through. The optimistic bound adds every
    uncollected prize still reachable before its deadline.
    """

    name = 'exact'

    def __init__(self, limits: Optional[SearchLimits] = None):
        self.limits = limits or SearchLimits()

    def solve(self, dtsp: DtspInstance) -> DtspSolution:
        limits = self.limits
        n = dtsp.graph.number_of_nodes()
        if limits.max_vertices is not None and n > limits.max_vertices:
            raise LimitExceededError(f"instance has {n} vertices, limit is {limits.max_vertices}")

        tol = settings.tolerance
        dist = shortest_distances(dtsp.graph)
        prize = dtsp.prize
        deadline = dtsp.deadline
        prize_vertices = sorted((v for v in dtsp.graph.nodes if prize[v] > 0), key=lambda v: (-prize[v], v))
        free = {v for v in dtsp.graph.nodes if prize[v] <= 0}
        stop_at = limits.deadline()

        best_prize = 0.0
        best_walk: List[int] = [dtsp.root]
        expansions = 0
        exhausted = False

        def search(current: int, length: float, walk: List[int], total: float, visited: Set[int]) -> None:
            nonlocal best_prize, best_walk, expansions, exhausted
            if exhausted:
                return
            expansions += 1
            if expansions > limits.max_expansions or (expansions % 1024 == 0 and time.monotonic() > stop_at):
                exhausted = True
                return
            if total > best_prize + tol:
                best_prize, best_walk = total, list(walk)
                logger.debug(f"Deadline-TSP incumbent {best_prize:.6f} after {expansions} expansions")

            live = [v for v in prize_vertices if v not in visited and length <= deadline[v] + tol]
            reachable = dist[current]
            if limits.prune:
                bound = total + sum(prize[v] for v in live if v in reachable and length + reachable[v] <= deadline[v] + tol)
                if bound <= best_prize + tol:
                    return
            if not live:
                return
            # Interior may use free vertices, collected ones and ones past their deadline.
            interior = {v for v in dtsp.graph.nodes if v in free or v in visited or length > deadline[v] + tol}
            paths = restricted_paths(dtsp.graph, current, interior)
            for v in live:
                if v not in paths:
                    continue
                d, path = paths[v]
                arrival = length + d
                gain = prize[v] if arrival <= deadline[v] + tol else 0.0
                visited.add(v)
                search(v, arrival, walk + path[1:], total + gain, visited)
                visited.discard(v)

        search(dtsp.root, 0.0, [dtsp.root], 0.0, {dtsp.root})
        solution = dtsp_prize(dtsp, best_walk)
        if exhausted:
            logger.warning(f"Deadline-TSP search stopped after {expansions} expansions; incumbent prize {solution.total_prize:.6f} is not proven optimal")
        return solution.model_copy(update={'optimal': not exhausted, 'expansions': expansions})


class GreedyDtspSolver:
    """Repeatedly travel to the collectable prize with the best prize-per-length ratio"""

    name = 'greedy'

    def solve(self, dtsp: DtspInstance) -> DtspSolution:
        tol = settings.tolerance
        eps = settings.distance_epsilon
        current = dtsp.root
        length = 0.0
        walk = [dtsp.root]
        visited = {dtsp.root}
        while True:
            interior = {v for v in dtsp.graph.nodes if dtsp.prize[v] <= 0 or v in visited or length > dtsp.deadline[v] + tol}
            paths = restricted_paths(dtsp.graph, current, interior)
            best: Optional[Tuple[float, int]] = None
            for v, (d, _) in sorted(paths.items()):
                if v in visited or dtsp.prize[v] <= 0 or length + d > dtsp.deadline[v] + tol:
                    continue
                ratio = dtsp.prize[v] / max(d, eps)
                if best is None or ratio > best[0]:
                    best = (ratio, v)
            if best is None:
                break
            v = best[1]
            d, path = paths[v]
            walk.extend(path[1:])
            visited.add(v)
            length += d
            current = v
        return dtsp_prize(dtsp, walk).model_copy(update={'optimal': False})


def dtsp_solve_exact(dtsp: DtspInstance, limits: Optional[SearchLimits] = None) -> DtspSolution:
    return ExactDtspSolver(limits).solve(dtsp)


DTSP_SOLVERS = {
    'exact': ExactDtspSolver,
    'greedy': GreedyDtspSolver,
}


def approx_max_probability(
    instance: Instance,
    budget: float,
    solver: Optional[DtspSolver] = None,
    rounding: bool = True,
    truncate: bool = False,
) -> Solution:
    """Max-Probability through Deadline-TSP: split tiers, convert, round prizes, solve, map the walk back"""
    solver = solver or ExactDtspSolver()
    if truncate:
        instance = truncate_saturated_tiers(instance)
    lower_bound = conditional_lower_bound(instance)
    single = to_single_cost(instance)
    dtsp = to_deadline_tsp(single, budget)
    if rounding:
        dtsp = round_prizes(dtsp)
    logger.info(f"Max-Probability via Deadline-TSP: {single.instance.n} split vertices, budget {budget}, "
                f"solver {solver.name}, rounding {'on' if rounding else 'off'}, smallest conditional probability {lower_bound:.6g}")

    dtsp_solution = solver.solve(dtsp)
    split_walk = Walk.of(single.instance, dtsp_solution.walk)
    walk = map_walk_back(single, split_walk)
    probability = success_probability(instance, walk, budget)
    status = SolveStatus.OK if dtsp_solution.optimal or solver.name != 'exact' else SolveStatus.LIMIT_EXCEEDED
    return Solution(
        walk=walk,
        budget=budget,
        probability=probability,
        solver=f"approx-{solver.name}",
        status=status,
        optimal=dtsp_solution.optimal and not rounding and solver.name == 'exact',
        stats={
            'dtsp_prize': dtsp_solution.total_prize,
            'prize': collected_prize(instance, walk, budget),
            'ledger': prize_ledger(dtsp, dtsp_solution.collected),
            'conditional_lower_bound': lower_bound,
            'lower_bound_constant': dtsp.lower_bound_constant,
            'expansions': dtsp_solution.expansions,
        },
    )
