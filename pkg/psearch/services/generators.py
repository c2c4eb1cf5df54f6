import logging
from pathlib import Path
from typing import Dict, List, Tuple

import networkx as nx
import numpy as np

from ..config import settings
from ..exceptions import InsufficientVerticesError
from ..models import GeneratorConfig, Instance, Site, Tier
from ..storage import parse_graph

logger = logging.getLogger(__name__)


def gen_small_world(config: GeneratorConfig, seed: int) -> Instance:
    """Watts-Strogatz graph with uniform edge costs and no sites yet.

    A disconnected draw is regenerated with the next seed.
    """
    graph = None
    for attempt in range(settings.regenerate_tries):
        graph = nx.watts_strogatz_graph(config.n, config.neighbors, config.rewire_prob, seed=seed + attempt)
        if nx.is_connected(graph):
            if attempt:
                logger.info(f"Small-world graph for seed {seed} regenerated {attempt} times before it was connected")
            break
        logger.info(f"Small-world graph with seed {seed + attempt} is disconnected, regenerating")
    else:
        raise InsufficientVerticesError(f"no connected small-world graph in {settings.regenerate_tries} tries from seed {seed}")

    rng = np.random.default_rng(seed)
    edges = sorted((min(u, v), max(u, v)) for u, v in graph.edges)
    weights = rng.uniform(config.edge_cost_min, config.edge_cost_max, size=len(edges))
    return Instance.build(n=config.n, edges=[(u, v, float(w)) for (u, v), w in zip(edges, weights)], start=0)


def _bounded_normal(rng: np.random.Generator, mean: float, std: float, bound: float, size: int) -> np.ndarray:
    """Normal draws resampled until each lies within mean +- bound and above zero"""
    if std == 0:
        return np.full(size, mean)
    values = rng.normal(mean, std, size)
    while True:
        bad = (np.abs(values - mean) > bound) | (values <= 0)
        if not bad.any():
            return values
        values[bad] = rng.normal(mean, std, int(bad.sum()))


def _site_tiers(rng: np.random.Generator, config: GeneratorConfig) -> List[Tuple[float, float]]:
    count = int(rng.integers(config.tier_count_min, config.tier_count_max + 1))
    if count == 0:
        return []
    costs = np.unique(_bounded_normal(rng, config.cost_mean, config.cost_std, config.cost_bound_std * config.cost_std, count))
    probs = np.clip(rng.normal(config.prob_mean, config.effective_prob_std, len(costs)), 0.001, 0.999)
    if probs.sum() > 1.0:
        probs = probs * (0.999 / probs.sum())
    return [(float(c), float(p)) for c, p in zip(costs, probs)]


def gen_costs_and_probs(instance: Instance, config: GeneratorConfig, seed: int) -> Instance:
    """Draw every non-start vertex's cost table.

    Tier counts are uniform in the configured range; costs follow a normal
    bounded to a few standard deviations; probabilities follow a normal clipped
    to (0.001, 0.999) and rescaled to 0.999 when a vertex's mass exceeds 1.
    """
    rng = np.random.default_rng([seed, 1])
    sites = []
    for v in range(instance.n):
        if v == instance.start:
            sites.append(Site(id=v))
            continue
        tiers = _site_tiers(rng, config)
        sites.append(Site(id=v, tiers=tuple(Tier(cost=c, prob=p) for c, p in tiers)))
    return instance.with_sites(sites)


def sample_subgraph(instance: Instance, size: int, seed: int) -> Instance:
    """Breadth-first ball of ``size`` vertices around a seeded centre.

    The ball is re-indexed in BFS order with the centre as vertex 0 and start.
    Sites of the ball keep their tables; the centre's table is dropped.
    """
    graph = instance.graph
    rng = np.random.default_rng(seed)
    center = int(rng.integers(instance.n))
    order = [center] + [v for _, v in nx.bfs_edges(graph, center, sort_neighbors=sorted)]
    if len(order) < size:
        raise InsufficientVerticesError(f"component of vertex {center} has {len(order)} vertices, need {size}")
    chosen = order[:size]
    index: Dict[int, int] = {v: i for i, v in enumerate(chosen)}
    edges = [(index[u], index[v], w) for u, v, w in graph.subgraph(chosen).edges(data='weight')]
    tiers = {
        index[v]: [(t.cost, t.prob) for t in instance.sites[v].tiers]
        for v in chosen
        if v != center
    }
    logger.debug(f"Sampled a {size}-vertex ball around vertex {instance.labels[center]}")
    return Instance.build(n=size, edges=edges, tiers=tiers, start=0, labels=[instance.labels[v] for v in chosen])


def _read_graph(path: str) -> Instance:
    vertex_ids, edges = parse_graph(Path(path).read_text(encoding='utf-8'))
    index = {vid: i for i, vid in enumerate(vertex_ids)}
    return Instance.build(
        n=len(vertex_ids),
        edges=[(index[u], index[v], w) for u, v, w in edges],
        start=0,
        labels=vertex_ids,
    )


def generate_instance(config: GeneratorConfig, seed: int) -> Instance:
    """Topology plus cost tables, deterministic in (config, seed)"""
    if config.topology == 'small_world':
        instance = gen_small_world(config, seed)
    else:
        instance = _read_graph(config.graph_path)
        if config.sample_size is not None:
            instance = sample_subgraph(instance, config.sample_size, seed)
    instance = gen_costs_and_probs(instance, config, seed)
    logger.debug(f"Generated instance seed={seed}: {instance.n} vertices, {instance.graph.number_of_edges()} edges")
    return instance
