import itertools
import logging
import math
import time
from typing import List, Optional, Set, Tuple

import networkx as nx

from ..config import settings
from ..exceptions import InfeasibleError, InsufficientVerticesError, LimitExceededError, NotUniformError
from ..models import Instance, KmstSolution, SearchLimits, Solution, Walk
from .evaluation import success_probability

logger = logging.getLogger(__name__)


def required_k(p_succ: float, p: float) -> int:
    """Smallest k with 1 - (1 - p)^k >= p_succ"""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not 0 < p_succ < 1:
        raise ValueError(f"p_succ must lie in (0, 1), got {p_succ}")
    tol = settings.tolerance
    k = max(1, math.ceil(math.log1p(-p_succ) / math.log1p(-p)))
    # ceil of a rounded ratio can land one off either way
    while k > 1 and 1.0 - (1.0 - p) ** (k - 1) >= p_succ - tol:
        k -= 1
    while 1.0 - (1.0 - p) ** k < p_succ - tol:
        k += 1
    return k


def _tree_edges(tree: nx.Graph) -> Tuple[Tuple[int, int], ...]:
    return tuple(sorted((min(u, v), max(u, v)) for u, v in tree.edges))


def _exact_kmst(graph: nx.Graph, root: int, k: int, candidates: List[int], limits: SearchLimits) -> KmstSolution:
    """Cheapest MST over all connected (k+1)-vertex sets containing the root.

    A minimum tree spanning more than k other vertices can always drop a leaf,
    so only sets of exactly k + 1 vertices are examined.
    """
    stop_at = limits.deadline()
    best: Optional[KmstSolution] = None
    for checked, chosen in enumerate(itertools.combinations(candidates, k), start=1):
        if checked > limits.max_expansions or (checked % 256 == 0 and time.monotonic() > stop_at):
            raise LimitExceededError(f"exact k-MST stopped after {checked - 1} vertex sets", incumbent=best)
        sub = graph.subgraph((root, *chosen))
        if not nx.is_connected(sub):
            continue
        tree = nx.minimum_spanning_tree(sub, weight='weight')
        weight = tree.size(weight='weight')
        if best is None or weight < best.weight - settings.tolerance:
            best = KmstSolution(root=root, k=k, edges=_tree_edges(tree), weight=weight, optimal=True)
    if best is None:
        raise InsufficientVerticesError(f"no connected tree spans {k} vertices besides {root}")
    return best


def _cheapest_attachment(graph: nx.Graph, root: int, k: int) -> KmstSolution:
    """Grow from the root, always adding the lightest edge leaving the tree"""
    inside: Set[int] = {root}
    edges: List[Tuple[int, int]] = []
    weight = 0.0
    while len(inside) < k + 1:
        best = None
        for u in inside:
            for v, data in graph[u].items():
                if v in inside:
                    continue
                key = (data['weight'], v, u)
                if best is None or key < best:
                    best = key
        if best is None:
            raise InsufficientVerticesError(f"tree from {root} stalled at {len(inside) - 1} vertices")
        w, v, u = best
        inside.add(v)
        edges.append((min(u, v), max(u, v)))
        weight += w
    return KmstSolution(root=root, k=k, edges=tuple(sorted(edges)), weight=weight, optimal=False)


def kmst_solve(graph: nx.Graph, root: int, k: int, mode: str = 'exact', limits: Optional[SearchLimits] = None) -> KmstSolution:
    """Rooted k-MST: a minimum tree containing the root and at least k other vertices.

    ``exact`` enumerates vertex sets and is meant for small graphs; ``heuristic``
    uses cheapest attachment and carries no ratio guarantee.
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    limits = limits or SearchLimits()
    component = nx.node_connected_component(graph, root)
    if len(component) < k + 1:
        raise InsufficientVerticesError(f"component of {root} has {len(component) - 1} other vertices, need {k}")
    if k == 0:
        return KmstSolution(root=root, k=0, edges=(), weight=0.0, optimal=True)
    if mode == 'exact':
        solution = _exact_kmst(graph, root, k, sorted(component - {root}), limits)
    elif mode == 'heuristic':
        solution = _cheapest_attachment(graph, root, k)
    else:
        raise ValueError(f"unknown k-MST mode '{mode}'")
    logger.debug(f"{mode} k-MST: k={k}, weight {solution.weight:.6f}, {len(solution.edges)} edges")
    return solution


def tree_walk(tree: KmstSolution, stop_after: Optional[Set[int]] = None, needed: int = 0) -> List[int]:
    """Depth-first tour of the tree from its root, children in ascending id.

    With ``stop_after`` the tour ends at the moment the ``needed``-th member of
    that set is first reached.
    """
    children = nx.Graph()
    children.add_node(tree.root)
    children.add_edges_from(tree.edges)
    walk = [tree.root]
    seen = {tree.root}
    found = 0

    def visit(u: int) -> bool:
        nonlocal found
        for v in sorted(children[u]):
            if v in seen:
                continue
            seen.add(v)
            walk.append(v)
            if stop_after is not None and v in stop_after:
                found += 1
                if found >= needed:
                    return True
            if visit(v):
                return True
            walk.append(u)
        return False

    visit(tree.root)
    return walk


def uniform_tier(instance: Instance) -> Tuple[float, float]:
    """(c, p) shared by every non-start vertex, each holding exactly one tier"""
    shared = None
    for v, site in enumerate(instance.sites):
        if v == instance.start:
            continue
        if len(site.tiers) != 1:
            raise NotUniformError(f"vertex {v} has {len(site.tiers)} tiers, expected exactly one")
        tier = (site.tiers[0].cost, site.tiers[0].prob)
        if shared is None:
            shared = tier
        elif tier != shared:
            raise NotUniformError(f"vertex {v} offers {tier[0]}@{tier[1]}, others offer {shared[0]}@{shared[1]}")
    if shared is None:
        raise NotUniformError("instance has no vertex besides the start")
    return shared


def kmst_min_budget(instance: Instance, p_succ: float, mode: str = 'exact', limits: Optional[SearchLimits] = None) -> Solution:
    """Min-Budget for uniform instances: visit k sites along a cheap rooted tree.

    k is the number of independent chances of probability p needed to reach
    p_succ; the budget is twice the tree weight plus the common cost.
    """
    if not 0 < p_succ <= 1:
        raise ValueError(f"p_succ must lie in (0, 1], got {p_succ}")
    cost, p = uniform_tier(instance)
    tol = settings.tolerance
    available = instance.total_available_probability()
    if available < p_succ - tol or p <= 0:
        raise InfeasibleError(f"total available probability {available:.6f} < p_succ={p_succ}")
    if p >= 1.0:
        k = 1
    elif p_succ >= 1.0:
        raise InfeasibleError("p_succ = 1 needs a site with probability 1")
    else:
        k = required_k(p_succ, p)

    tree = kmst_solve(instance.graph, instance.start, k, mode, limits)
    sites = {v for v, site in enumerate(instance.sites) if site.tiers}
    walk = Walk.of(instance, tree_walk(tree, stop_after=sites, needed=k))
    budget = 2.0 * tree.weight + cost
    probability = success_probability(instance, walk, budget)
    if probability < p_succ - tol:
        raise InfeasibleError(f"tree walk reaches {probability:.6f} < p_succ={p_succ}")
    logger.info(f"k-MST Min-Budget: k={k}, tree weight {tree.weight:.6f}, budget {budget:.6f}")
    return Solution(
        walk=walk,
        budget=budget,
        probability=probability,
        solver='kmst',
        stats={'k': k, 'tree_weight': tree.weight, 'tree_optimal': tree.optimal, 'mode': mode, 'walk_weight': walk.travel_cost},
    )
