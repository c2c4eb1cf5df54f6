import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

from ..config import settings
from ..exceptions import DegenerateError, PrizeBoundError
from ..models import DtspInstance, Instance, SingleCostInstance, Site, Tier, Walk
from .evaluation import prize_of_probability

logger = logging.getLogger(__name__)


def conditional_probabilities(site: Site) -> List[float]:
    """p_v(c_i) / (1 - sum_{j<i} p_v(c_j)) for each tier of the site"""
    conditionals = []
    prefix = 0.0
    for i, tier in enumerate(site.tiers):
        remaining = 1.0 - prefix
        if remaining <= settings.tolerance:
            raise DegenerateError(site.id, i)
        conditionals.append(min(1.0, tier.prob / remaining))
        prefix += tier.prob
    return conditionals


def truncate_saturated_tiers(instance: Instance) -> Instance:
    """Drop the tiers that follow a cumulative probability of 1 (they can never be counted)"""
    sites = []
    for site in instance.sites:
        kept: List[Tier] = []
        prefix = 0.0
        for tier in site.tiers:
            if 1.0 - prefix <= settings.tolerance:
                logger.debug(f"Vertex {site.id}: dropping tier at cost {tier.cost}, prefix mass already 1")
                break
            kept.append(tier)
            prefix += tier.prob
        sites.append(Site(id=site.id, tiers=tuple(kept)))
    return instance.with_sites(sites)


def to_single_cost(instance: Instance) -> SingleCostInstance:
    """Split every k-tier vertex v into a chain u_1..u_k joined by zero-weight edges.

    u_1 keeps v's index and adjacency; u_2..u_k get fresh indices and labels. Tier i moves
    to u_i with its conditional probability, so visiting u_1..u_i with remaining
    budget b fails with probability 1 - sum_{j<=i} p_v(c_j).
    """
    n = instance.n
    edges: List[Tuple[int, int, float]] = [(u, v, w) for u, v, w in instance.graph.edges(data='weight')]
    tiers: Dict[int, List[Tuple[float, float]]] = {}
    back_map: List[Tuple[int, Optional[int]]] = [(v, 0 if instance.sites[v].tiers else None) for v in range(n)]
    chains: Dict[int, Tuple[int, ...]] = {}
    labels = list(instance.labels)
    next_label = max(labels) + 1

    for v, site in enumerate(instance.sites):
        if not site.tiers:
            continue
        conditionals = conditional_probabilities(site)
        chain = [v]
        for i in range(1, len(site.tiers)):
            u = len(back_map)
            back_map.append((v, i))
            labels.append(next_label)
            next_label += 1
            edges.append((chain[-1], u, 0.0))
            chain.append(u)
        for u, tier, p in zip(chain, site.tiers, conditionals):
            tiers[u] = [(tier.cost, p)]
        chains[v] = tuple(chain)

    split = Instance.build(
        n=len(back_map),
        edges=edges,
        tiers=tiers,
        start=instance.start,
        labels=labels,
        allow_zero_weights=True,
    )
    logger.debug(f"Split instance: {n} -> {split.n} vertices")
    return SingleCostInstance(instance=split, original=instance, back_map=tuple(back_map), chains=chains)


def expand_walk(single: SingleCostInstance, walk: Walk) -> Walk:
    """Canonical expansion of an original walk: a full chain excursion at every first arrival"""
    vertices: List[int] = []
    seen = set()
    for v in walk.vertices:
        vertices.append(v)
        if v in seen:
            continue
        seen.add(v)
        chain = single.chains.get(v, (v,))
        if len(chain) > 1:
            vertices.extend(chain[1:])
            vertices.extend(reversed(chain[:-1]))
    return Walk.of(single.instance, vertices)


def map_walk_back(single: SingleCostInstance, walk: Walk) -> Walk:
    """Collapse zero-weight chain excursions to single visits of the original vertex"""
    vertices: List[int] = []
    for u in walk.vertices:
        v = single.back_map[u][0]
        if not vertices or vertices[-1] != v:
            vertices.append(v)
    return Walk.of(single.original, vertices)


def to_deadline_tsp(single: SingleCostInstance, budget: float) -> DtspInstance:
    """Deadline-TSP with prize -log(1 - p_v) and deadline budget - c_v (the budget already spent)"""
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    prizes = []
    deadlines = []
    for site in single.instance.sites:
        if site.tiers and site.id != single.instance.start:
            tier = site.tiers[0]
            prizes.append(prize_of_probability(tier.prob))
            deadlines.append(budget - tier.cost)
        else:
            prizes.append(0.0)
            deadlines.append(budget)
    return DtspInstance(
        graph=single.instance.graph,
        root=single.instance.start,
        prize=tuple(prizes),
        deadline=tuple(deadlines),
    )


def round_prizes(dtsp: DtspInstance, c: Optional[float] = None) -> DtspInstance:
    """Integer prizes: floor(pi) when pi >= 1, 1 when 0 < pi < 1, 0 stays 0.

    The constant c of the 1/c lower bound is measured over positive prizes and
    reported on the result; when ``c`` is given the bound is enforced.
    """
    positive = [p for p in dtsp.prize if p > 0]
    measured = 1.0 / min(positive) if positive else 1.0
    if c is not None and positive and min(positive) < 1.0 / c - settings.tolerance:
        raise PrizeBoundError(f"smallest positive prize {min(positive):.6g} is below 1/c = {1.0 / c:.6g}")
    rounded = tuple(float(math.floor(p)) if p >= 1 else (1.0 if p > 0 else 0.0) for p in dtsp.prize)
    logger.debug(f"Rounded {len(positive)} positive prizes, lower-bound constant c = {measured:.6g}")
    return DtspInstance(
        graph=dtsp.graph,
        root=dtsp.root,
        prize=rounded,
        deadline=dtsp.deadline,
        lower_bound_constant=measured,
    )


def conditional_lower_bound(instance: Instance) -> float:
    """Smallest positive conditional tier probability; 1/c in the approximation precondition"""
    smallest = math.inf
    for site in instance.sites:
        for p in conditional_probabilities(site):
            if p > 0:
                smallest = min(smallest, p)
    return smallest


def prize_ledger(dtsp: DtspInstance, collected: Sequence[int]) -> List[Tuple[int, float, float]]:
    """(vertex, prize, deadline) for every collected vertex with a positive prize"""
    return [(v, dtsp.prize[v], dtsp.deadline[v]) for v in sorted(collected) if dtsp.prize[v] > 0]
