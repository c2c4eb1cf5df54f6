import math
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pytest

from psearch.models import DtspInstance, Instance
from psearch.services.evaluation import minimal_budget_from_arrivals, success_from_arrivals


def make_instance(
    n: int,
    edges: Sequence[Tuple[int, int, float]],
    tiers: Optional[Dict[int, Sequence[Tuple[float, float]]]] = None,
    start: int = 0,
) -> Instance:
    return Instance.build(n=n, edges=edges, tiers=tiers or {}, start=start)


def random_instance(seed: int, n: int = 4, extra_edges: int = 1, max_tiers: int = 2, p_max: float = 0.6) -> Instance:
    """Connected graph (random tree plus extra edges) with integer weights and small tier tables"""
    rng = np.random.default_rng(seed)
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(v))
        edges[(u, v)] = float(rng.integers(1, 5))
    for _ in range(extra_edges):
        u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        edges.setdefault((u, v), float(rng.integers(1, 5)))
    tiers = {}
    for v in range(1, n):
        count = int(rng.integers(0, max_tiers + 1))
        costs = sorted({float(c) for c in rng.integers(0, 6, size=count)})
        probs = [round(float(rng.uniform(0.05, p_max)), 2) for _ in costs]
        if sum(probs) > 0.95:
            probs = [round(p * 0.95 / sum(probs), 4) for p in probs]
        tiers[v] = list(zip(costs, probs))
    return make_instance(n, [(u, v, w) for (u, v), w in edges.items()], tiers)


def all_walks(graph, start: int, max_edges: int) -> Iterator[Tuple[List[int], List[float]]]:
    """Every walk from start with at most max_edges edges, with its prefix costs"""
    stack = [([start], [0.0])]
    while stack:
        walk, prefix = stack.pop()
        yield walk, prefix
        if len(walk) - 1 < max_edges:
            for v, data in graph[walk[-1]].items():
                stack.append((walk + [v], prefix + [prefix[-1] + data['weight']]))


def first_arrivals(walk: List[int], prefix: List[float]) -> List[Tuple[float, int]]:
    seen = set()
    arrivals = []
    for v, spent in zip(walk, prefix):
        if v not in seen:
            seen.add(v)
            arrivals.append((spent, v))
    return arrivals


def exhaustive_edges(instance: Instance) -> int:
    # concatenation of at most n-1 simple segments of at most n-1 edges each
    return (instance.n - 1) ** 2


def brute_min_budget(instance: Instance, p_succ: float, max_edges: Optional[int] = None) -> Optional[float]:
    best = None
    seen = set()
    for walk, prefix in all_walks(instance.graph, instance.start, max_edges or exhaustive_edges(instance)):
        arrivals = tuple(first_arrivals(walk, prefix))
        if arrivals in seen:
            continue
        seen.add(arrivals)
        budget = minimal_budget_from_arrivals(instance, arrivals, p_succ)
        if budget is not None and (best is None or budget < best):
            best = budget
    return best


def brute_max_probability(instance: Instance, budget: float, max_edges: Optional[int] = None) -> float:
    best = 0.0
    for walk, prefix in all_walks(instance.graph, instance.start, max_edges or exhaustive_edges(instance)):
        if prefix[-1] > budget:
            continue
        best = max(best, success_from_arrivals(instance, first_arrivals(walk, prefix), budget))
    return best


def brute_dtsp(dtsp: DtspInstance, max_edges: int) -> float:
    best = 0.0
    for walk, prefix in all_walks(dtsp.graph, dtsp.root, max_edges):
        collected = {v for length, v in first_arrivals(walk, prefix) if length <= dtsp.deadline[v] + 1e-9}
        best = max(best, math.fsum(dtsp.prize[v] for v in collected))
    return best


@pytest.fixture
def single_site():
    """Edge start-v of weight 2, site v offering 3@0.5"""
    return make_instance(2, [(0, 1, 2.0)], {1: [(3.0, 0.5)]})


@pytest.fixture
def star():
    """Centre 0 with leaves 1, 2, 3 at weights 1, 2, 3"""
    return make_instance(4, [(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0)], {1: [(1.0, 0.5)], 2: [(1.0, 0.5)], 3: [(1.0, 0.5)]})
